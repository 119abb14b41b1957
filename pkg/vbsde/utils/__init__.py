from .load_config import (PricingConfig, MarketConfig, ClaimConfig, GridConfig, EnsembleConfig, BasisConfig,
                          ToleranceConfig, OutputConfig, SCHEMA_VERSION, SOLVER_NAMES, load_config,
                          config_from_dict, config_to_dict, apply_overrides, apply_environment, validate_config,
                          create_market, create_grid, create_basis, create_section)
