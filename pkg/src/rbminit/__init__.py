"""Dataset-free weight initialization for Bernoulli-Bernoulli RBMs.

The package has two halves:

* a replica-symmetric mean-field analyzer that locates beta_max, the
  weight-prior scale maximizing the visible-hidden layer correlation of
  the initial RBM (``meanfield``, ``quadrature``, ``initialization``);
* a desk-scale RBM engine that demonstrates the initialization on toy and
  binarized data: exact/PCD maximum-likelihood training with adam, exact
  and annealed-importance-sampling likelihood evaluation (``rbm``,
  ``training``, ``evaluation``, ``datasets``, ``experiment``).

A FastAPI service (``rbminit.service``) wraps the library; the ``rbminit``
CLI is a thin client of that service.
"""

__version__ = "0.1.0"

from .spaces import HiddenSpace  # noqa: F401
