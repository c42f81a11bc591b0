"""Two linearly coupled unstable nodes: where does synchronization really start?

x_i' = x_i - eps * (x_i - x_j). The difference u = x_1 - x_2 obeys
u' = (1 - 2 eps) u, so the network synchronizes iff eps > 1/2, which is
C/n for C = 1. The half-size value C/(2n) = 1/4 is not sufficient.
"""
import numpy as np

from netsync import dynamics as dy
from netsync import graph as gr
from netsync.simulator import assemble, integrate
from netsync.stability import epsilon_certified, epsilon_star


def main():
    g = gr.path(2)
    c = gr.generic_bound(g, lambda m: 1.0).c_value
    model = dy.custom_model(1, lambda X, t, p: X.copy(), name="unstable")
    h = dy.linear_coupling(1)
    print(f"C = {c:g}  epsilon_star = {epsilon_star(c, 2):g}  epsilon_certified = {epsilon_certified(c, 2):g}")
    print("eps,|u(10)|,predicted")
    for eps in np.linspace(0.0, 1.0, 11):
        traj = integrate(assemble(g, model, h, [1.0], eps), [[1.0], [0.0]], 0, 10, 1e-3, 1000)
        print(f"{eps:.1f},{traj.delta_inf[-1]:.6e},{np.exp((1 - 2 * eps) * 10):.6e}")


if __name__ == "__main__":
    main()
