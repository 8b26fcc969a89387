"""Tour of the reverse-mode engine, ending with double backprop.

The critic's gradient-penalty term needs the gradient of a gradient: the
penalty is built from grad_x D(x), then differentiated again with respect to
the discriminator's parameters.  This demo shows the engine agreeing with
central finite differences on exactly that structure.

Run: python3 demos/03_autodiff_double_backprop.py
"""

import numpy as np

from ganfolio import autodiff as ad
from ganfolio.autodiff import Tensor, finite_difference_check, gradient

# --- first-order basics -------------------------------------------------------
x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
loss = ad.sum_(ad.square(x))
(g,) = gradient(loss, [x])
print(f"d sum(x^2)/dx at (1,2,3) = {g.values}  (expect 2x)")

# --- a gradient that is itself a graph node ------------------------------------
x = Tensor(np.linspace(-1.0, 1.0, 6), requires_grad=True)
score = ad.sum_(x)
(gx,) = gradient(score, [x], create_graph=True)
penalty = ad.square(ad.add_scalar(ad.l2_norm(gx), -1.0))
print(f"penalty for D = sum: {penalty.item():.6f} "
      f"(analytic (sqrt(6) - 1)^2 = {(np.sqrt(6) - 1) ** 2:.6f})")

# --- double backprop through a small leaky-relu critic -------------------------
rng = np.random.default_rng(0)
w1 = Tensor(rng.standard_normal((16, 10)) * 0.4, requires_grad=True)
w2 = Tensor(rng.standard_normal((1, 16)) * 0.4, requires_grad=True)
bias = Tensor(np.zeros(16))  # biases drop out of grad_x through leaky-relu nets
x_point = rng.standard_normal(10)


def gradient_penalty_of(params):
    weight1, weight2 = params
    x_in = Tensor(x_point, requires_grad=True)
    hidden = ad.leaky_relu(ad.add(ad.matmul(x_in, ad.transpose(weight1)), bias), 0.2)
    score = ad.sum_(ad.matmul(hidden, ad.transpose(weight2)))
    (grad_x,) = gradient(score, [x_in], create_graph=True)
    return ad.square(ad.add_scalar(ad.l2_norm(grad_x), -1.0))


err = finite_difference_check(gradient_penalty_of, [w1, w2], step=1e-5)
print(f"max relative error of d(penalty)/d(params) vs finite differences: {err:.2e}")
assert err < 1e-4
