# Copyright 2026 The dpscale Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Differential-privacy accounting and compute-optimal planning.

The accounting functions and :class:`Law` come straight from the C++ core.
:class:`Service` answers the same requests as the ``dpscale`` command and the
``/api/v1`` endpoints and returns the decoded JSON documents.
"""

import json
from typing import Any, Dict, Optional, Union

from dpscale._core import (
    Error,
    Law,
    analytic_gaussian_delta,
    analytic_gaussian_epsilon,
    default_orders,
    epsilon_of,
    mia_advantage,
    rdp_subsampled_gaussian,
)
from dpscale import _core

__all__ = [
    "Error",
    "Law",
    "Service",
    "analytic_gaussian_delta",
    "analytic_gaussian_epsilon",
    "calibrate_nbr",
    "default_orders",
    "epsilon_of",
    "mia_advantage",
    "rdp_subsampled_gaussian",
]

Param = Union[str, int, float]


def _params(kwargs: Dict[str, Param]) -> Dict[str, str]:
  out = {}
  for key, value in kwargs.items():
    if isinstance(value, bool):
      raise TypeError(f"parameter {key!r} must be a number or string")
    if isinstance(value, float):
      value = "inf" if value == float("inf") else repr(value)
    out[key] = str(value)
  return out


class Service:
  """Request handlers shared with the CLI and the HTTP API.

  Keyword arguments are the query parameters of the matching endpoint, e.g.
  ``Service(law).plan(compute=1e18, epsilon=4, data=1e7)``.
  """

  def __init__(self, law: Optional[Law] = None, *, delta: float = 1e-8,
               timeout_ms: int = 30000, max_configs: int = 1000000):
    self._service = _core.Service(law, delta=delta, timeout_ms=timeout_ms,
                                  max_configs=max_configs)

  @property
  def has_law(self) -> bool:
    return self._service.has_law

  def health(self) -> Dict[str, Any]:
    return json.loads(self._service.health())

  def law(self) -> Dict[str, Any]:
    return json.loads(self._service.law())

  def calibrate(self, **params: Param) -> Dict[str, Any]:
    return json.loads(self._service.calibrate(_params(params)))

  def plan(self, **params: Param) -> Dict[str, Any]:
    return json.loads(self._service.plan(_params(params)))

  def sweep(self, **params: Param) -> Dict[str, Any]:
    return json.loads(self._service.sweep(_params(params)))

  def vector_field(self, **params: Param) -> Dict[str, Any]:
    return json.loads(self._service.vector_field(_params(params)))


def calibrate_nbr(*, epsilon: float, data: float, batch: float, steps: int,
                  delta: float = 1e-8, batching: str = "both") -> Dict[str, Any]:
  """Smallest noise-batch ratio meeting (epsilon, delta); see ``calibrate``."""
  return Service().calibrate(epsilon=epsilon, data=data, batch=batch,
                             steps=steps, delta=delta, batching=batching)
