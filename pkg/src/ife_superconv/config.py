"""Configuration for the IFE solver and verification harness."""

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Numerical and runtime settings."""

    # Logging
    log_level: str = "WARNING"

    # Polynomial degree cap (monomial representation)
    max_degree: int = 6

    # Quadrature: points per piece are p + extra
    assembly_extra_points: int = 2
    exact_extra_points: int = 6

    # Interfaces closer than tolerance * (b - a) to a point are snapped to it
    interface_tolerance: float = 1e-14

    # Root localization
    root_scan_density: int = 64
    root_tolerance: float = 1e-14
    # Roots closer than root_endpoint_gap * (hi - lo) to an endpoint are endpoint zeros
    root_endpoint_gap: float = 1e-9

    # Error columns below floor_factor * eps * scale are left out of rates
    floor_factor: float = 50.0

    # L-infinity sampling rule
    linf_points_regular: int = 8
    linf_points_interface: int = 10

    model_config = {
        "env_prefix": "IFE_SUPERCONV_",
        "env_file": ".env",
        "extra": "ignore",
    }

    def assembly_points(self, p: int) -> int:
        """Gauss points per piece for assembly and basis inner products."""
        return p + self.assembly_extra_points

    def exact_points(self, p: int) -> int:
        """Gauss points per piece for integrals against the exact solution."""
        return p + self.exact_extra_points


# Global settings instance
settings = Settings()
