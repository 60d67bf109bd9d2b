# Copyright 2026 The cfvi Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Continuous fitted value iteration (cFVI) and its robust variant (rFVI)."""

from ._core import (
    ActionCost,
    CheckpointError,
    Config,
    ConfigError,
    DomainError,
    Error,
    Model,
    Policy,
    RewardStats,
    TrainingDivergence,
    UnsupportedOperation,
    action_adversary,
    load_checkpoint,
    model_names,
    state_adversary,
    train,
)

__all__ = [
    "ActionCost",
    "CheckpointError",
    "Config",
    "ConfigError",
    "DomainError",
    "Error",
    "Model",
    "Policy",
    "RewardStats",
    "TrainingDivergence",
    "UnsupportedOperation",
    "action_adversary",
    "load_checkpoint",
    "model_names",
    "state_adversary",
    "train",
]
