"""Mean-field steady states of a pumped-dissipative coupled cavity QED array.

A single driven site stands in for the lattice: the neighbour photon field is
a classical amplitude determined self-consistently from the stationary state
of a quantum master equation with thermal TLS pumping and cavity loss.  The
package reproduces the coherent/incoherent phase diagram, the loss-induced
plateaus of the frame frequency and photon number, the bath currents, and the
closed-form estimate for where the first plateau begins.
"""

__version__ = "0.1.0"

from .hilbert import (
    HilbertConfig,
    basis_index,
    build_annihilation,
    build_number_operators,
    build_sigma_minus,
)
from .hamiltonian import (
    EPS_DEG,
    EigenOperatorEntry,
    EigenOperatorSet,
    EigenSystem,
    MeanField,
    ModelParams,
    build_eigenoperators,
    build_h_jc,
    build_k_s,
    diagonalize,
)
from .liouvillian import (
    Assembly,
    EXP_CLAMP,
    FermiWeight,
    assemble,
    fermi,
    fermi_weights,
    superop_hamiltonian,
    superop_loss,
    superop_pump,
    unvec,
    vec,
)
from .steady import (
    SteadyStateCertificate,
    SteadyStateError,
    certify,
    solve_steady,
    spectral_gap,
    trace_distance,
)
from .selfconsistent import (
    MAX_ITER,
    PSI_THRESHOLD,
    SEED_LADDER,
    TOL_SC,
    PhaseLabel,
    SelfConsistentSolution,
    classify_phase,
    classify_point,
    residual,
    solve_selfconsistent,
)
from .observables import (
    ObservableRecord,
    PlateauRegion,
    currents,
    detect_plateaus,
    energy_gaps,
    observable_record,
    photon_number,
)
from .equilibrium import (
    GroundStateSolution,
    NoSignChangeError,
    equilibrium_boundary,
    gibbs_state,
    gs_current_estimates,
    mu_b_first_closed_form,
    mu_b_first_gs_estimate,
    solve_equilibrium_groundstate,
)
from .sweeps import (
    BoundaryRow,
    ConfigError,
    KappaRow,
    ScanResult,
    SweepRow,
    SweepSpec,
    emit_config,
    emit_results,
    kappa_cutoff_schedule,
    load_config,
    run_kappa_scan,
    run_mu_b_scan,
    run_phase_diagram,
    run_single_point,
    write_manifest,
)

__all__ = [name for name in dir() if not name.startswith("_")]
