"""Reference parameterization of the 28-feature financial schema.

Exponent pairs fitted on a large German corporate dataset, kept as fixtures
for demos, curve plots and tests. The same reference system retrieved its
votes from the 9 most similar cases.
"""
from __future__ import annotations

import numpy as np

from .similarity import LocalParams

REFERENCE_K = 9

# (exponent toward smaller reference values, exponent toward larger ones),
# indexed by schema position VAR1..VAR28
_EXPONENT_PAIRS = [
    (5.86, 1.17),  # Cash
    (1.23, 0.83),  # Inventories
    (1.95, 1.01),  # Current assets
    (2.16, 1.38),  # Tangible assets
    (7.08, 2.70),  # Intangible assets
    (4.25, 2.41),  # Total assets
    (3.57, 6.47),  # Accounts receivable (A.R.)
    (2.68, 0.69),  # Lands and buildings
    (1.70, 1.24),  # Equity
    (2.08, 1.22),  # Shareholder loan
    (1.64, 5.37),  # Accrual for pension liabilities
    (1.08, 2.00),  # Total current liabilities
    (0.79, 1.32),  # Total long-term liabilities
    (1.63, 0.84),  # Bank debt
    (1.14, 2.33),  # Accounts payable (A.P.)
    (2.12, 5.53),  # Sales
    (1.18, 6.53),  # Administrative expenses
    (0.71, 1.04),  # Amortization depreciation
    (1.53, 1.45),  # Interest expenses
    (4.43, 1.71),  # EBIT
    (0.65, 1.69),  # Operating income
    (2.57, 0.61),  # Net income
    (1.21, 0.34),  # Increase inventories
    (1.13, 1.10),  # Increase liabilities
    (4.88, 5.00),  # Increase cash
    (5.11, 4.55),  # A.R. against affiliated companies
    (0.78, 1.68),  # A.P. against affiliated companies
    (2.32, 0.75),  # Number of employees
]


def financial_local_params() -> LocalParams:
    """The reference exponent pairs for the financial statement schema."""
    below = np.array([a for a, _ in _EXPONENT_PAIRS])
    above = np.array([b for _, b in _EXPONENT_PAIRS])
    return LocalParams(below=below, above=above)
