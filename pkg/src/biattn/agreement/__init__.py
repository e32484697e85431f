from .losses import LossKind, disagreement, loss_mul, loss_soa, loss_sos
from .objective import JointObjective, PairTerms, joint_objective, pair_objective
