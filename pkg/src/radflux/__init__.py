"""Flux-theoretic radiometry: classical and measure-valued radiance, with verifiers."""

__version__ = "0.1.0"

from .errors import (
    EvaluationError,
    GeometryError,
    GridMismatchError,
    InvalidArgumentError,
    RadfluxError,
)
from .sphere import (
    SphereSubset,
    SphericalQuadrature,
    as_direction,
    build_quadrature,
    integrate_sphere,
    integrate_subset,
    solid_angle,
)
from .measures import (
    SphereMeasure,
    VectorSphereMeasure,
    combine,
    decompose,
    measure_of,
    multiply,
    norm,
    pair,
)
from .regions import (
    Ball,
    Box,
    Tetrahedron,
    TriangleMesh,
    boundary_samples,
    gauss_residual,
    make_tetrahedron,
    volume,
    volume_integrate,
)
from .radiance import (
    ScalarRadianceField,
    directional_power,
    energy_flux_vector,
    irradiance,
    lambert_density,
    radiant_intensity,
    total_power,
)
from .measure_radiance import (
    RadianceTensor,
    TotalDistribution,
    apply_to_normal,
    energy_flux_vector_measure,
    radiance_measure_of,
    total_distribution,
    total_power_from_distribution,
    verify_radiation_assumption,
)
from .balance import (
    BalanceData,
    CauchyMap,
    boundedness_constant,
    differential_balance_residual,
    integral_balance_residual,
    ray_conservation_residual,
    tetrahedron_residual,
    virtual_power_residual,
)
