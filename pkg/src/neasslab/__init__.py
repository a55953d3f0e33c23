"""neasslab: a numerical laboratory for dressed almost-stationary states of
gapped fermionic lattice models at exact-diagonalization scale.

The package builds finite fermionic lattice models, inverts the Liouvillian
on their gapped ground-state sectors, constructs order-by-order dressing
generators with numerical stationarity certificates, and measures the
adiabatic-theorem exponents with a reproducible sweep harness.
"""

from .errors import NeassLabError
from .lattice import Boundary, Lattice, build_chain, build_lattice
from .fock import (
    FockSpace,
    LocalOperator,
    annihilation_op,
    conditional_expectation,
    creation_op,
    density_op,
    embed_local,
    locality_profile,
)
from .interactions import (
    Interaction,
    LipschitzPotential,
    assemble_operator,
    bulk_interaction_norm,
    interaction_norm,
    lipschitz_constant,
    tdl_diagnostic,
)
from .models import (
    ModelParams,
    TimeDependentHamiltonian,
    TimeDependentOperator,
    build_example_hamiltonian,
    free_fermion_gap,
    free_fermion_ground_energy,
    one_body_matrix,
)
from .spectral import (
    GroundState,
    SpectralData,
    bulk_gap_ratio,
    diagonalize,
    ground_state,
    uniform_gap_scan,
)
from .liouvillian import (
    LiouvillianContext,
    inverse_locality_report,
    liouvillian_apply,
    quasi_local_inverse,
)
from .series import OperatorPolynomial, adjoint_series
from .neass import (
    NeassGenerator,
    apply_dressing,
    build_generators,
    kubo_coefficient,
    neass_expectation,
    pin_orientation,
    pinned_orientation,
    resum_generator,
)
from .dynamics import Propagator, heisenberg_evolve, propagate, static_evolve
from .switching import Bump, Constant, Ramp, parse_switching

__version__ = "0.1.0"
