from freqplan.nn.checkpoint import load_checkpoint, save_checkpoint
from freqplan.nn.optim import Adam, adam_update, clip_grad_norm
from freqplan.nn.policy import PolicyConfig, PolicyNet, init_params, param_shapes, policy_forward

__all__ = [
    "Adam", "PolicyConfig", "PolicyNet", "adam_update", "clip_grad_norm", "init_params",
    "load_checkpoint", "param_shapes", "policy_forward", "save_checkpoint",
]
