"""Regularized random Fourier features for operator learning on PDE data."""

from .config import ExperimentConfig, config_hash, load_config, parse_config
from .features import (
    FeatureModel,
    FeatureWeights,
    build_feature_matrix,
    predict,
    sample_feature_weights,
)
from .fem import (
    Interpolant,
    Mesh1D,
    Mesh2D,
    build_mesh_1d,
    interpolate,
    triangulate_2d,
)
from .pde_data import (
    BurgersConfig,
    DarcyConfig,
    Dataset,
    gen_advection_I,
    gen_advection_II,
    gen_advection_III,
    gen_burgers,
    gen_darcy,
    solve_burgers,
    solve_darcy,
    uniform_grid,
)
from .pipeline import (
    EvalReport,
    GridSplit,
    TrainedOperator,
    corrupt_dataset,
    evaluate,
    infer,
    relative_test_error,
    split_grid,
    train,
)
from .sampling import (
    INF,
    GpSpec,
    RngState,
    StudentTParams,
    add_relative_noise,
    add_relative_noise_rows,
    sample_gp_periodic,
    sample_student_t,
)
from .solver import (
    RegularizationSpec,
    SolveReport,
    fit,
    fit_complex,
    fit_complex_sweep,
    regularizer_diagonal,
)
from .theory import (
    ConcentrationReport,
    characteristic_fn,
    concentration_experiment,
    min_separation,
    separated_points,
    separation_for_eta,
    theorem_conditions,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
