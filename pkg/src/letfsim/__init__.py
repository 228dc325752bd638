"""Agent-based simulation of a futures market and a leveraged-ETF market
coupled by arbitrage and leveraged-ETF rebalancing."""

from .agents import ARBITRAGE_ID, FUTURES, LETF, LETF_AGENT_ID, MARKETS
from .matching import BUY, SELL, Order, OrderBook, Trade, round_to_tick
from .metrics import LiquidityReport, LiquiditySample
from .simulation import ConfigError, SimConfig, World, load_config, run

__all__ = [
    "ARBITRAGE_ID",
    "BUY",
    "ConfigError",
    "FUTURES",
    "LETF",
    "LETF_AGENT_ID",
    "LiquidityReport",
    "LiquiditySample",
    "MARKETS",
    "Order",
    "OrderBook",
    "SELL",
    "SimConfig",
    "Trade",
    "World",
    "load_config",
    "round_to_tick",
    "run",
]

__version__ = "0.1.0"
