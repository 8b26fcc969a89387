"""Train a small scenario model and draw synthetic future paths.

Uses a toy configuration (short windows, few epochs) so the demo finishes in
about a minute; the defaults in TrainConfig are the full-scale protocol
(h=40, f=20, m=100, 1000 epochs).

Run: python3 demos/04_train_and_simulate.py
"""

import numpy as np

from ganfolio import PriceFrame, TrainConfig, simulate_paths, train

rng = np.random.default_rng(5)
days = 46
t = np.arange(days, dtype=np.float64)
prices = np.stack([
    30.0 + 0.08 * t + 2.0 * np.sin(t / 3.0) + 0.1 * rng.standard_normal(days),
    60.0 + 0.02 * t + 3.0 * np.cos(t / 5.0) + 0.1 * rng.standard_normal(days),
])
dates = tuple(f"day-{k:04d}" for k in range(days))
frame = PriceFrame(("AAA", "BBB"), dates, np.abs(prices) + 1.0)

train_frame = PriceFrame(frame.tickers, frame.dates[:26], frame.prices[:, :26])
test_frame = PriceFrame(frame.tickers, frame.dates[26:], frame.prices[:, 26:])

config = TrainConfig(model_kind="acgan", h=8, f=4, m=6, epochs=20, seed=1)
print(f"training {config.model_kind} (h={config.h}, f={config.f}, {config.epochs} epochs)...")
bundle = train(train_frame, config)
last = bundle.training_log[-1]
print(f"final epoch: critic {last.critic_loss:+.4f}, generator {last.generator_loss:+.4f}, "
      f"autoencoding penalty {last.ap_loss:.4f}")

paths = simulate_paths(bundle, test_frame, n_draws=5, seed=9)
print(f"synthesized paths array: {paths.shape} (draws, assets, days)")
print(f"first h={config.h} days are copies of the observed test data: "
      f"{np.array_equal(paths[0][:, :8], test_frame.prices[:, :8])}")

actual_end = test_frame.prices[:, -1]
print("asset AAA end-of-period: actual "
      f"{actual_end[0]:.2f}, draws {np.round(paths[:, 0, -1], 2).tolist()}")
print("asset BBB end-of-period: actual "
      f"{actual_end[1]:.2f}, draws {np.round(paths[:, 1, -1], 2).tolist()}")
