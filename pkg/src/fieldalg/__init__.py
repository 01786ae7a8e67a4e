"""Desk-scale numerics for the field algebra of a symplectic space."""

from .symplectic import (
    CentralizerSplit,
    PhaseSpaceSplit,
    Subspace,
    SymplecticError,
    SymplecticSpace,
    centralizer_split,
    classify,
    full_subspace,
    holonomic_split,
    lattice_intersect,
    lattice_sum,
    sigma,
    sigma_complement,
    standard_space,
    standard_split,
    subspace,
    symplectic_basis,
    zero_subspace,
)
from .semilattice import (
    FiniteSemilattice,
    MoebiusTable,
    SemilatticeError,
    closure,
    moebius,
    moebius_invert,
    sub_ideals,
)
from .twisted import (
    DensityOnSubspace,
    DiracComb,
    TwistedElement,
    TwistedError,
    adjoint,
    comb_element,
    cstar_norm_estimate,
    density_element,
    gaussian_density,
    l1_norm,
    symplectic_fourier,
    twisted_convolve,
    unit_element,
)
from .reps import (
    FiniteWeylRep,
    GridRep,
    Observable,
    OperatorMatrix,
    RegularGridRep,
    RepresentationError,
    UnsupportedBackendError,
    field_op,
    frame_distance,
    gaussian_frame,
    grid_rep,
    measure_norm_estimate,
    refinement_frame,
    regular_rep,
    rep_of_measure,
    resolvent_family,
    weyl_op,
    weyl_relation_residual,
)
from .grading import (
    ComponentGenerator,
    GradedElement,
    GradingError,
    MembershipReport,
    ProjectionReport,
    component_generator,
    graded_decompose,
    membership_check,
    morphism_residual,
    project_PE,
    support_check,
)
from .spectra import (
    DefectCurves,
    GradedHamiltonian,
    SpectraError,
    SpectrumReport,
    TranslationLimits,
    compactness_defect,
    hvz_essential_spectrum,
    laplacian_delta_e,
    nbody_hamiltonian,
    spectrum,
    translation_limits,
)

__version__ = "0.1.0"
