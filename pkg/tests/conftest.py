import random

import pytest

from letfsim import SimConfig
from letfsim.matching import OrderBook

from reference_matcher import NaiveBook, random_stream


def replay(ops, lifetime=None):
    """Feed the same op stream to the real book and the naive oracle."""
    book = OrderBook("futures", lifetime=lifetime)
    naive = NaiveBook(lifetime=lifetime)
    real_log = []
    next_id = 1
    for op, payload, t in ops:
        if op == "order":
            side, kind, price, qty, owner = payload
            order = book.new_order(side, kind, price, qty, owner, t)
            assert order.id == next_id
            trades = book.submit(order, t)
            real_log.extend((tr.time, tr.price, tr.quantity, tr.buyer, tr.seller) for tr in trades)
            naive.submit(next_id, side, kind, price, qty, owner, t)
            next_id += 1
        elif op == "cancel":
            assert book.cancel(payload) == naive.cancel(payload)
        else:
            book.expire(t)
            naive.expire(t)
    return book, naive, real_log


@pytest.fixture
def small_config():
    """A scaled-down market that runs in well under a second."""
    return SimConfig(
        n=40,
        tau_max=200,
        t_c=400,
        t_ms=600,
        t_me=1200,
        t_e=1600,
        s0=200,
        seed=7,
    )


@pytest.fixture
def rng():
    return random.Random(12345)


__all__ = ["replay", "random_stream"]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
