"""Quality-diversity search for workforce scheduling and routing with car and public-transport modes."""
from .domain import (
    DIMENSIONS, Characteristics, CostParams, Genotype, Instance, Journey, Mode, Phenotype, TravelModel, Visit,
    Violation, validate_phenotype,
)
from .errors import ConfigError, InfeasibleVisitError, InstanceError, WsrpError
from .decoder import decode, evaluate_genotype
from .evaluator import evaluate
from .instances import GeneratorConfig, generate_instance, load_instance, save_instance
from .map_elites import Archive, ArchiveConfig, MapElitesConfig, run_map_elites
from .ea import EaConfig, run_ea
from .metrics import coverage, precision, vargha_delaney_a

__version__ = "0.1.0"
