"""Q-learning search for process recipes on a discretized parameter lattice."""

from .env import RecipeEnv, StepOutcome
from .grid import (GridState, MoveAction, ParameterDim, ParameterGrid, apply_action,
                   decode_action, decode_state, default_paper_grid, encode_action,
                   encode_state, load_grid)
from .learner import (Hyperparameters, QTable, TrainingReport, extract_recommendation,
                      load_qtable, save_qtable, select_action, train, update_q)
from .oracle import OracleResult, brute_force, hill_climb, random_search
from .predictor import (ColorQuad, ObjectiveSpec, ReferenceSurrogate, TablePredictor,
                        evaluate, load_table, objective, predict, save_table)

__version__ = "0.1.0"
