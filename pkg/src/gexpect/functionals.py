"""Named test functionals shared by configs, experiments and tests.

All entries are numpy-vectorised so the DP and the PDE initial data can be
evaluated on whole grids at once.
"""

from __future__ import annotations

import numpy as np

from .ambiguity import TestFunction
from .errors import DomainError

REGISTRY = {
    "identity": TestFunction(lambda s: s, growth="power", exponent=1.0, name="identity"),
    "neg_identity": TestFunction(lambda s: -s, growth="power", exponent=1.0,
                                 name="neg_identity"),
    "abs": TestFunction(np.abs, growth="power", exponent=1.0, name="abs"),
    "positive_part": TestFunction(lambda s: np.maximum(s, 0.0), growth="power",
                                  exponent=1.0, name="positive_part"),
    "square": TestFunction(lambda s: s * s, growth="quadratic", name="square"),
    "neg_square": TestFunction(lambda s: -s * s, growth="quadratic", name="neg_square"),
    "excess_square": TestFunction(lambda s: np.maximum(s * s - 1.0, 0.0),
                                  growth="quadratic", name="excess_square"),
    "sin": TestFunction(np.sin, growth="bounded", name="sin"),
    "cos": TestFunction(np.cos, growth="bounded", name="cos"),
}

PAIR_REGISTRY = {
    "increment": TestFunction(lambda x1, x2: x2 - x1, arity=2, growth="power",
                              exponent=1.0, name="increment"),
    "increment_square": TestFunction(lambda x1, x2: (x2 - x1) ** 2, arity=2,
                                     growth="quadratic", name="increment_square"),
    "product": TestFunction(lambda x1, x2: x1 * x2, arity=2, growth="quadratic",
                            name="product"),
    "first_square": TestFunction(lambda x1, x2: x1 * x1, arity=2, growth="quadratic",
                                 name="first_square"),
}


def get(name: str) -> TestFunction:
    if name not in REGISTRY:
        raise DomainError(f"unknown functional: {name}")
    return REGISTRY[name]


def get_pair(name: str) -> TestFunction:
    if name not in PAIR_REGISTRY:
        raise DomainError(f"unknown pair functional: {name}")
    return PAIR_REGISTRY[name]
