"""Tendon-driven five-finger hand: kinematics, transmission, control and bus emulation."""

from .config import HandConfig, load_config
from .control import HandSimulator, LoopTiming
from .errors import (ConfigurationError, HandError, InvalidArgumentError, PoseLookupError,
                     ReachabilityError, SingularTargetError)
from .kinematics import (FingerGeometry, HandModel, default_hand, forward_kinematics,
                         inverse_kinematics, jacobian)

__version__ = "0.1.0"
