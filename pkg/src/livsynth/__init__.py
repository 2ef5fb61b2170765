"""livsynth: evolutionary synthesis of linear input-varying sequence backbones."""

from .autodiff import NumericError, ShapeError, Tensor
from .costs import CostReport, cache_bytes, cost_report, genome_cost_report, parameter_count
from .evolve import (EvolutionConfig, EvolutionState, crowding_distance,
                     dominates, fa_attraction, fa_intensity, hypervolume_2d,
                     load_snapshot, non_dominated_sort, normalize, run,
                     save_snapshot, scalarize, tournament_select)
from .fitness import (EvalResult, ObjectiveSpec, TaskSpec, evaluate,
                      make_batch, make_evaluator, make_task)
from .genome import (BackboneGenome, GenomeParseError, GenomeShapeError, LivGene,
                     Violation, crossover, format_genome, hybrid_genome,
                     load_genome, mutate, parse, random_genome, repair,
                     save_genome, seed_population, sharing_groups, validate)
from .model import (CompiledBackbone, CompileError, LivInstance, ModelDims,
                    apply_structured, compile_backbone, featurize, forward)
from .optim import AdamState, TrainConfig, adam_step, clip_gradients, lr_at
from .oracle import OracleUnsupportedError, dense_apply, materialize_dense
from .pool import (FeatureGroupSpec, LivClassSpec, OperatorGenome, OptionPool,
                   PoolError, default_pool, expand_liv_class, featurizer_genome)
from .presets import striped_mamba, transformer_plus_plus
from .render import motif_statistics, render_dot, render_text
from .training import TrainResult, train

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
