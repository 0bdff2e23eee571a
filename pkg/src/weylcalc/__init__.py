"""Exact Weyl symbol calculus with numerical spectral and index checks.

The modules, from the algebraic core outward:

``symbol``      exact polynomial symbols, the sharp product and #-powers
``hermite``     Weyl quantization as matrices in a truncated Hermite basis
``weights``     weight sequences, associated functions, the entire series P
``spectral``    Jacobi eigensolver, counting functions, Weyl-law predictions
``parametrix``  exact scalar parametrix and pointwise matrix parametrix
``index``       boundary-integral index and a truncated-operator oracle
``sweeps``      counting and eigenvalue sweeps written to CSV
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .gaussian import GaussianRational
from .symbol import (PolySymbol, derive, multinomial_identity_check, sharp_commutator,
                     sharp_power_closed, sharp_power_closed_sum, sharp_power_iterated,
                     sharp_term, star, variables)
from .hermite import HermiteBasisSpec, HermiteOperator, interior_block, ladder_matrices, quantize
from .weights import (EntireSeries, WeightSequence, associated_function, check_conditions,
                      growth_ratio_check, series_eval, series_inverse)
from .spectral import (SpectrumResult, counting_from_spectrum, eigensolve_hermitian,
                       lattice_count_harmonic, operator_series_matrix, predicted_counting,
                       predicted_eigenvalue, weyl_constant)
from .matsym import MatrixSymbol
from .parametrix import (RationalSymbol, matrix_parametrix_eval, parametrix_terms,
                         verify_left_inverse)
from .index import check_ellipticity, index_integral, operator_index_oracle
from .sweeps import ExperimentConfig, run_counting_sweep, run_eigenvalue_sweep
