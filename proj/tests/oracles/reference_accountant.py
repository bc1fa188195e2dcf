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

"""Regenerates the frozen reference values used by the accounting tests.

Reference: dp_accounting's RdpAccountant (pip install dp-accounting==0.6.0),
on the order grid the C++ accountant uses (1.1, 1.2, ..., 10.9 and the
integers 11..256). Its fractional-order bound sums absolute series terms and
is slightly looser than the C++ one, which only ever lowers the C++ ratios.
Run: python3 tests/oracles/reference_accountant.py
"""
import dp_accounting as dpa
from dp_accounting import rdp

ORDERS = [1 + x / 10.0 for x in range(1, 100)] + list(range(11, 257))
DELTA = 1e-8

# (data, epsilon, iterations, batch) rows of the saturating-compute table.
TABLE = [
    (1e5, 1, 1800, 510), (1e5, 4, 1800, 4100), (1e5, 16, 2700, 14000),
    (1e5, 64, 6300, 19000), (1e6, 1, 2500, 8200), (1e6, 4, 6500, 23000),
    (1e6, 16, 14000, 46000), (1e6, 64, 12000, 190000),
    (1e7, 1, 9600, 78000), (1e7, 4, 11000, 220000), (1e7, 16, 12000, 740000),
    (1e7, 64, 49000, 880000), (1e8, 1, 58000, 220000),
    (1e8, 4, 49000, 880000), (1e8, 16, 93000, 1000000),
    (1e8, 64, 110000, 880000), (1e9, 1, 94000, 880000),
    (1e9, 4, 110000, 880000), (1e9, 16, 110000, 880000),
    (1e9, 64, 110000, 1100000),
]


def event(q, sigma, steps):
  return dpa.SelfComposedDpEvent(
      dpa.PoissonSampledDpEvent(q, dpa.GaussianDpEvent(sigma)), steps)


def epsilon(n, b, t, nbr, delta=DELTA):
  acc = rdp.RdpAccountant(ORDERS)
  acc.compose(event(b / n, b * nbr, t))
  return acc.get_epsilon(delta)


def calibrate(eps, n, b, t, delta=DELTA):
  sigma = dpa.calibrate_dp_mechanism(
      lambda: rdp.RdpAccountant(ORDERS), lambda s: event(b / n, s, t), eps,
      delta, bracket_interval=dpa.LowerEndpointAndGuess(1e-6, 1.0), tol=1e-10)
  return sigma / b


if __name__ == "__main__":
  print("eps_of(1e7,1024,16000,2^-15) =", repr(epsilon(1e7, 1024, 16000, 2**-15)))
  print("eps_of(1e7,65536,16000,2^-10) =", repr(epsilon(1e7, 65536, 16000, 2**-10)))
  print("eps_of(1e6,4096,2000,2^-9) =", repr(epsilon(1e6, 4096, 2000, 2**-9)))
  print("calibrate(8,1e7,65536,16000) =", repr(calibrate(8, 1e7, 65536, 16000)))
  for n, e, t, b in TABLE:
    print("    {%g, %g, %d, %d, %r}," % (e, n, b, t, calibrate(e, n, b, t)))
