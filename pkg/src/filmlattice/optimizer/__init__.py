from .moves import DEFAULT_WEIGHTS, IllegalMove, Move, NoLegalMove, apply_move, check_legal, propose
from .annealing import AnnealSchedule, InfeasibleStart, Objective, RunResult, anneal, objective_energy
from .brute import BruteForceResult, Enumerator, InstanceTooLarge, brute_force, count_states

__all__ = [
    "DEFAULT_WEIGHTS", "IllegalMove", "Move", "NoLegalMove", "apply_move", "check_legal", "propose",
    "AnnealSchedule", "InfeasibleStart", "Objective", "RunResult", "anneal", "objective_energy",
    "BruteForceResult", "Enumerator", "InstanceTooLarge", "brute_force", "count_states",
]
