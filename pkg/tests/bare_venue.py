"""Minimal two-book venue for driving the arbitrageur without a scheduler."""

from letfsim.agents import ARBITRAGE_ID, FUTURES, LETF
from letfsim.matching import BUY, SELL, OrderBook


class Venue:
    """Bare two-book venue: no scheduler, no logging."""

    def __init__(self):
        self.books = {FUTURES: OrderBook(FUTURES), LETF: OrderBook(LETF)}
        self.now = 0
        self.arb = None

    def _route(self, trades):
        if self.arb is not None:
            for tr in trades:
                if ARBITRAGE_ID in (tr.buyer, tr.seller):
                    self.arb.on_trade(tr)
        return trades

    def place_limit(self, market, side, price, owner):
        book = self.books[market]
        order = book.new_order(side, "limit", price, 1, owner, self.now)
        self._route(book.submit(order, self.now))
        return order

    def place_market(self, market, side, owner):
        return self._route(self.books[market].market_order(side, owner, self.now))

    def cancel(self, market, order_id, owner):
        return self.books[market].cancel(order_id)

    def rest(self, market, side, price, qty=1, owner=7):
        self.books[market].limit(side, price, owner, self.now, qty)


def random_venue(lb, la, fb, fa):
    v = Venue()
    for side, levels, market in ((BUY, lb, LETF), (SELL, la, LETF), (BUY, fb, FUTURES), (SELL, fa, FUTURES)):
        for p, q in levels:
            book = v.books[market]
            # keep each book uncrossed before the arbitrageur acts
            other = book.best_ask() if side == BUY else book.best_bid()
            if other is not None and ((side == BUY and p >= other) or (side == SELL and p <= other)):
                continue
            v.rest(market, side, p, q)
    return v
