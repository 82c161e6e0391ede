"""`odecheck`: measured order of every registered tableau on the split scalar ODE."""

import logging
from typing import Dict

from ..problems.studies import ode_order_study
from ..sirk import registered_tableaus


def cmd_odecheck() -> Dict[str, float]:
    """Observed order at the finest step halving, per tableau name"""
    orders = {}
    for name, pair in registered_tableaus().items():
        rows = ode_order_study(pair)
        for dt, error, order in rows:
            logging.debug(f"{name}: dt={dt:.4e} error={error:.4e} order={order}")
        orders[name] = rows[-1][2]
        print(f"{name}: order {orders[name]:.3f} (expected {pair.order})")
    return orders


def register(subparsers):
    parser = subparsers.add_parser("odecheck", help="SIRK order check on u' = a u + b u")
    parser.set_defaults(handler=lambda args: cmd_odecheck())
