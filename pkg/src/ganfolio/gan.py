"""Adversarial scenario models: training loop and path synthesis.

Four model kinds share one loop:

* ``cgan``         - conditioner + simulator vs. critic, standard regime;
* ``acgan``        - adds a decoder and the autoencoding penalty;
* ``hybrid_cgan``  - adds a proposer network whose surrogate mean replaces
  the historical mean in the normalization (trained first, then frozen);
* ``hybrid_acgan`` - both extras.

Each training step visits one window: normalize, sample a latent vector,
update the generator side (ascend the critic's score on the fake window,
minus the autoencoding penalty when present), regenerate the fake with the
updated generator, then update the critic (Wasserstein difference with a
gradient penalty on an interpolate between the real and fake windows).
Per-epoch window order is a fresh seeded permutation without replacement.

All randomness is drawn from independent streams keyed by (seed, purpose,
component), so runs are reproducible bit-for-bit and model variants that
differ only by an extra component consume identical randomness for the
shared components.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import NumericFault, ValidationError
from .marketdata import (PriceFrame, WindowSample, extract_window,
                         inference_index_set, training_index_set)
from .networks import (AdamState, MlpNetwork, adam_step, build_network, forward,
                       init_parameters, load_networks, save_networks)
from .normalization import (NormStats, denormalize, fit_eavesdrop, fit_standard,
                            make_hybrid_stats, normalize)

MODEL_KINDS = ("cgan", "acgan", "hybrid_cgan", "hybrid_acgan")

# rng stream tags: (seed, purpose, component) -> independent generator
_PURPOSE = {"init": 1, "dropout": 2, "shuffle": 3, "z": 4, "eps": 5, "draw": 6,
            "proposer_shuffle": 7}
_COMPONENT = {"conditioner": 1, "decoder": 2, "simulator": 3, "discriminator": 4,
              "proposer": 5, "": 0}


def _rng(seed: int, purpose: str, component: str = "", extra: int | None = None):
    key = [int(seed), _PURPOSE[purpose], _COMPONENT[component]]
    if extra is not None:
        key.append(int(extra))
    return np.random.default_rng(key)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run (defaults match the protocol)."""

    model_kind: str = "cgan"
    h: int = 40
    f: int = 20
    m: int = 100
    epochs: int = 1000
    lambda1: float = 10.0
    lambda2: float = 3.0
    lr: float = 2e-5
    beta1: float = 0.5
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    critic_steps_per_gen: int = 1
    batch_windows: int = 1
    regime: str = "auto"  # auto | standard | eavesdrop | hybrid
    allow_forward_bias: bool = False
    output_scale: float | None = None
    proposer_mode: str = "network"  # "copy_mu" swaps in the identity-on-mean diagnostic

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValidationError(f"unknown model kind {self.model_kind!r}; expected {MODEL_KINDS}")
        if min(self.h, self.f, self.m) < 1:
            raise ValidationError(f"h, f, m must be positive, got {self.h}, {self.f}, {self.m}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValidationError("penalty coefficients must be non-negative")
        if self.critic_steps_per_gen < 1 or self.batch_windows < 1:
            raise ValidationError("critic_steps_per_gen and batch_windows must be >= 1")
        if self.regime not in ("auto", "standard", "eavesdrop", "hybrid"):
            raise ValidationError(f"unknown regime {self.regime!r}")
        if self.is_hybrid:
            if self.regime not in ("auto", "hybrid"):
                raise ValidationError(f"{self.model_kind} requires the hybrid regime")
        else:
            if self.regime == "hybrid":
                raise ValidationError(f"{self.model_kind} cannot use the hybrid regime")
            if self.regime == "eavesdrop" and not self.allow_forward_bias:
                raise ValidationError(
                    "eavesdrop regime uses future data; set allow_forward_bias=True "
                    "(CLI: --allow-forward-bias) to run it as a diagnostic")
            if self.output_scale not in (None, 1.0):
                raise ValidationError("output_scale only applies to hybrid model kinds")
        if self.proposer_mode not in ("network", "copy_mu"):
            raise ValidationError(f"unknown proposer mode {self.proposer_mode!r}")

    @property
    def w(self) -> int:
        return self.h + self.f

    @property
    def is_hybrid(self) -> bool:
        return self.model_kind in ("hybrid_cgan", "hybrid_acgan")

    @property
    def is_acgan(self) -> bool:
        return self.model_kind in ("acgan", "hybrid_acgan")

    @property
    def resolved_regime(self) -> str:
        if self.regime != "auto":
            return self.regime
        return "hybrid" if self.is_hybrid else "standard"

    @property
    def resolved_output_scale(self) -> float:
        if self.output_scale is not None:
            return float(self.output_scale)
        return 100.0 if self.is_hybrid else 1.0


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    critic_loss: float
    generator_loss: float
    ap_loss: float  # nan when the model has no autoencoding penalty
    proposer_mse: float  # nan when the model has no proposer


@dataclass
class ModelBundle:
    """Trained parameter sets for one model variant."""

    config: TrainConfig
    tickers: tuple[str, ...]
    conditioner: MlpNetwork
    simulator: MlpNetwork
    discriminator: MlpNetwork
    decoder: MlpNetwork | None = None
    proposer: MlpNetwork | None = None
    training_log: list[EpochLog] = field(default_factory=list)
    proposer_mse: float = float("nan")
    trained: bool = False

    def __post_init__(self):
        if self.config.is_acgan and self.decoder is None:
            raise ValidationError(f"{self.config.model_kind} bundle needs a decoder")
        if not self.config.is_acgan and self.decoder is not None:
            raise ValidationError(f"{self.config.model_kind} bundle cannot carry a decoder")
        needs_proposer = self.config.is_hybrid and self.config.proposer_mode == "network"
        if needs_proposer and self.proposer is None:
            raise ValidationError(f"{self.config.model_kind} bundle needs a proposer")

    @property
    def n_assets(self) -> int:
        return len(self.tickers)


def build_bundle(config: TrainConfig, tickers) -> ModelBundle:
    """Fresh bundle with seeded parameter initialization (not yet trained)."""
    tickers = tuple(tickers)
    n = len(tickers)
    cond_role = "encoder" if config.is_acgan else "conditioner"
    sim_role = "hybrid_simulator" if config.is_hybrid else "simulator"
    conditioner = build_network(cond_role, n, config.h, config.f, config.m)
    simulator = build_network(sim_role, n, config.h, config.f, config.m,
                              output_scale=config.resolved_output_scale)
    discriminator = build_network("discriminator", n, config.h, config.f, config.m)
    init_parameters(conditioner, _rng(config.seed, "init", "conditioner"))
    init_parameters(simulator, _rng(config.seed, "init", "simulator"))
    init_parameters(discriminator, _rng(config.seed, "init", "discriminator"))
    decoder = None
    if config.is_acgan:
        decoder = build_network("decoder", n, config.h, config.f, config.m)
        init_parameters(decoder, _rng(config.seed, "init", "decoder"))
    return ModelBundle(config=config, tickers=tickers, conditioner=conditioner,
                       simulator=simulator, discriminator=discriminator, decoder=decoder)


# ---------------------------------------------------------------------------
# proposer
# ---------------------------------------------------------------------------

def _proposer_input(historical: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Standard-normalized flattened history plus the raw per-asset mean."""
    normalized = normalize(historical, fit_standard(historical))
    return np.concatenate([normalized.ravel(), np.asarray(mu, dtype=np.float64)])


def propose_mean(proposer: MlpNetwork, historical, mu) -> np.ndarray:
    """Deterministic surrogate per-asset window means (inference mode)."""
    historical = np.asarray(historical, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    out = forward(proposer, _proposer_input(historical, mu), mode="infer")
    return out.values.copy()


def _bundle_propose(bundle: ModelBundle, historical: np.ndarray, mu: np.ndarray) -> np.ndarray:
    if bundle.config.proposer_mode == "copy_mu":
        return np.asarray(mu, dtype=np.float64)
    return propose_mean(bundle.proposer, historical, mu)


def train_proposer(train_frame: PriceFrame, config: TrainConfig) -> tuple[MlpNetwork, float]:
    """Fit the surrogate-mean network by MSE against whole-window means.

    Inputs are (standard-normalized history, raw historical means); targets
    are the raw per-asset means over the full window.  The final 10% of
    window starts are held out; after every epoch the held-out MSE is
    evaluated and the parameters from the best epoch are the ones returned
    (training on these small windows oscillates late, so last-epoch weights
    are not reliably the best).  Returns (network, its held-out MSE).
    """
    if not config.is_hybrid:
        raise ValidationError(f"proposer training applies to hybrid kinds, not {config.model_kind}")
    starts = training_index_set(train_frame.day_count, config.w)
    samples = []
    for start in starts:
        window = extract_window(train_frame, int(start), config.h, config.f)
        mu = window.historical.mean(axis=1)
        samples.append((_proposer_input(window.historical, mu),
                        window.full.mean(axis=1)))
    n_val = max(1, round(0.1 * len(samples))) if len(samples) > 1 else 0
    train_samples = samples[:len(samples) - n_val]
    val_samples = samples[len(samples) - n_val:] or train_samples

    proposer = build_network("proposer", train_frame.n_assets, config.h, config.f, config.m)
    init_parameters(proposer, _rng(config.seed, "init", "proposer"))
    state = AdamState.for_parameters(proposer.parameters(), lr=config.lr,
                                     beta1=config.beta1, beta2=config.beta2,
                                     epsilon=config.adam_epsilon)
    shuffle_rng = _rng(config.seed, "proposer_shuffle")
    dropout_rng = _rng(config.seed, "dropout", "proposer")

    def validation_mse():
        return float(np.mean([np.mean((forward(proposer, x, mode="infer").values - target) ** 2)
                              for x, target in val_samples]))

    best_mse = np.inf
    best_params = None
    for _ in range(config.epochs):
        for idx in shuffle_rng.permutation(len(train_samples)):
            x, target = train_samples[idx]
            leaves = [Tensor(p, requires_grad=True) for p in proposer.parameters()]
            out = forward(proposer, x, mode="train", rng=dropout_rng, params=leaves)
            loss = ad.mse(out, Tensor(target))
            grads = ad.gradient(loss, leaves)
            new_params, state = adam_step(proposer.parameters(), grads, state)
            proposer.set_parameters(new_params)
        epoch_mse = validation_mse()
        if epoch_mse < best_mse:
            # adam_step allocates fresh arrays, so holding references is safe
            best_mse, best_params = epoch_mse, proposer.parameters()
    proposer.set_parameters(best_params)
    return proposer, best_mse


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def gradient_penalty(discriminator: MlpNetwork, real, fake, eps: float, *,
                     params: list[Tensor] | None = None, mode: str = "train",
                     rng: np.random.Generator | None = None,
                     dropout_masks: list[np.ndarray] | None = None) -> Tensor:
    """(||grad_x D(x_bar)||_2 - 1)^2 at x_bar = eps*real + (1-eps)*fake.

    The norm is taken over the flattened window; the result stays
    differentiable with respect to the discriminator parameters (double
    backprop through the inner gradient).
    """
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.shape != fake.shape:
        raise ValidationError(f"real {real.shape} vs fake {fake.shape}")
    interpolate = Tensor((eps * real + (1.0 - eps) * fake).ravel(), requires_grad=True)
    score = ad.sum_(forward(discriminator, interpolate, mode=mode, rng=rng,
                            params=params, dropout_masks=dropout_masks))
    (grad_x,) = ad.gradient(score, [interpolate], create_graph=True)
    return ad.square(ad.add_scalar(ad.l2_norm(grad_x), -1.0))


def generator_loss(bundle: ModelBundle, norm_window: WindowSample, z: np.ndarray, *,
                   params: dict[str, list[Tensor]] | None = None, mode: str = "train",
                   rngs: dict[str, np.random.Generator] | None = None,
                   masks: dict[str, list[np.ndarray]] | None = None) -> tuple[Tensor, Tensor | None]:
    """Loss minimized by the generator side: -D(fake) [+ lambda2 * AP].

    ``norm_window`` must already be normalized under the bundle's regime.
    Returns (loss, autoencoding-penalty term or None).  Discriminator
    parameters enter as constants.
    """
    params = params or {}
    rngs = rngs or {}
    masks = masks or {}
    n, f = bundle.n_assets, bundle.config.f
    hist_flat = Tensor(norm_window.historical.ravel())
    code = forward(bundle.conditioner, hist_flat, mode=mode, rng=rngs.get("conditioner"),
                   params=params.get("conditioner"), dropout_masks=masks.get("conditioner"))
    fake_future = forward(bundle.simulator, ad.concatenate([Tensor(z), code]),
                          mode=mode, rng=rngs.get("simulator"),
                          params=params.get("simulator"), dropout_masks=masks.get("simulator"))
    fake_window = ad.reshape(
        ad.concatenate([Tensor(norm_window.historical), ad.reshape(fake_future, (n, f))], axis=1),
        (n * bundle.config.w,))
    score = ad.sum_(forward(bundle.discriminator, fake_window, mode=mode,
                            rng=rngs.get("discriminator"),
                            dropout_masks=masks.get("discriminator")))
    loss = ad.scalar_multiply(score, -1.0)
    ap_term = None
    if bundle.config.is_acgan:
        reconstruction = forward(bundle.decoder, code, mode=mode, rng=rngs.get("decoder"),
                                 params=params.get("decoder"), dropout_masks=masks.get("decoder"))
        ap_term = ad.mse(reconstruction, hist_flat)
        loss = ad.add(loss, ad.scalar_multiply(ap_term, bundle.config.lambda2))
    return loss, ap_term


def critic_loss(bundle: ModelBundle, norm_window: WindowSample, fake_window: np.ndarray,
                eps: float, *, params: list[Tensor] | None = None, mode: str = "train",
                rng: np.random.Generator | None = None,
                masks: dict[str, list[np.ndarray]] | None = None) -> Tensor:
    """Loss minimized by the critic: D(fake) - D(real) + lambda1 * penalty."""
    masks = masks or {}
    real = norm_window.full
    if fake_window.shape != real.shape:
        raise ValidationError(f"fake window {fake_window.shape} vs real {real.shape}")
    d_real = ad.sum_(forward(bundle.discriminator, real.ravel(), mode=mode, rng=rng,
                             params=params, dropout_masks=masks.get("real")))
    d_fake = ad.sum_(forward(bundle.discriminator, fake_window.ravel(), mode=mode, rng=rng,
                             params=params, dropout_masks=masks.get("fake")))
    penalty = gradient_penalty(bundle.discriminator, real, fake_window, eps,
                               params=params, mode=mode, rng=rng,
                               dropout_masks=masks.get("interpolate"))
    return ad.add(ad.subtract(d_fake, d_real),
                  ad.scalar_multiply(penalty, bundle.config.lambda1))


# ---------------------------------------------------------------------------
# training steps
# ---------------------------------------------------------------------------

def _leaves(net: MlpNetwork) -> list[Tensor]:
    return [Tensor(p, requires_grad=True) for p in net.parameters()]


def _generate_fake_window(bundle: ModelBundle, norm_window: WindowSample, z: np.ndarray,
                          rngs) -> np.ndarray:
    """Forward-only fake full window (used by the critic side)."""
    with ad.no_grad():
        code = forward(bundle.conditioner, norm_window.historical.ravel(), mode="train",
                       rng=rngs.get("conditioner"))
        fake_future = forward(bundle.simulator, ad.concatenate([Tensor(z), code]), mode="train",
                              rng=rngs.get("simulator"))
    n, f = bundle.n_assets, bundle.config.f
    return np.concatenate([norm_window.historical, fake_future.values.reshape(n, f)], axis=1)


def generator_step(bundle: ModelBundle, batch, rngs, optim: dict[str, AdamState]) -> tuple[float, float]:
    """One Adam update of the generator side over a batch of windows.

    ``batch`` is a list of (normalized window, latent vector) pairs; losses
    average over the batch.  Only conditioner/simulator (and decoder for
    autoencoding kinds) parameters change.  Returns (generator loss, AP term).
    """
    params = {"conditioner": _leaves(bundle.conditioner), "simulator": _leaves(bundle.simulator)}
    nets = {"conditioner": bundle.conditioner, "simulator": bundle.simulator}
    if bundle.config.is_acgan:
        params["decoder"] = _leaves(bundle.decoder)
        nets["decoder"] = bundle.decoder
    total = None
    ap_values = []
    for norm_window, z in batch:
        loss, ap = generator_loss(bundle, norm_window, z, params=params, mode="train", rngs=rngs)
        total = loss if total is None else ad.add(total, loss)
        if ap is not None:
            ap_values.append(float(ap.values))
    total = ad.scalar_multiply(total, 1.0 / len(batch))
    flat = [t for name in params for t in params[name]]
    grads = ad.gradient(total, flat)
    cursor = 0
    for name, net in nets.items():
        count = len(params[name])
        new_params, optim[name] = adam_step(net.parameters(), grads[cursor:cursor + count],
                                            optim[name])
        net.set_parameters(new_params)
        cursor += count
    ap_mean = float(np.mean(ap_values)) if ap_values else float("nan")
    return float(total.values), ap_mean


def critic_step(bundle: ModelBundle, batch, rngs, optim: dict[str, AdamState]) -> float:
    """One Adam update of the critic over a batch of windows.

    Fake windows are regenerated forward-only with the current generator (the
    step after the generator update, matching the training loop order); only
    discriminator parameters change.  Returns the critic loss value.
    """
    d_params = _leaves(bundle.discriminator)
    total = None
    for norm_window, z in batch:
        fake_window = _generate_fake_window(bundle, norm_window, z, rngs)
        eps = float(rngs["eps"].random())
        loss = critic_loss(bundle, norm_window, fake_window, eps,
                           params=d_params, mode="train", rng=rngs.get("discriminator"))
        total = loss if total is None else ad.add(total, loss)
    total = ad.scalar_multiply(total, 1.0 / len(batch))
    grads = ad.gradient(total, d_params)
    new_params, optim["discriminator"] = adam_step(bundle.discriminator.parameters(), grads,
                                                   optim["discriminator"])
    bundle.discriminator.set_parameters(new_params)
    return float(total.values)


# ---------------------------------------------------------------------------
# normalization per regime
# ---------------------------------------------------------------------------

def window_stats(bundle: ModelBundle, window: WindowSample) -> NormStats:
    """Per-asset stats for one raw window under the bundle's regime."""
    regime = bundle.config.resolved_regime
    if regime == "standard":
        return fit_standard(window.historical)
    if regime == "eavesdrop":
        return fit_eavesdrop(window.full, bundle.config.h, allow_forward_bias=True)
    base = fit_standard(window.historical)
    proposed = _bundle_propose(bundle, window.historical, base.center)
    return make_hybrid_stats(base.scale, proposed)


def _normalized_window(window: WindowSample, stats: NormStats, h: int) -> WindowSample:
    full = normalize(window.full, stats)
    return WindowSample(full=full, historical=full[:, :h], future=full[:, h:],
                        start_index=window.start_index)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def train(train_frame: PriceFrame, config: TrainConfig) -> ModelBundle:
    """Train one model variant on the training frame.

    Hybrid kinds first fit (or stub, for the copy-mean diagnostic) the
    proposer, which stays frozen during adversarial training.  Each epoch
    visits every window start exactly once in a fresh seeded random order;
    per window the generator updates first, then the critic (possibly
    several times).  Raises on numeric divergence, naming the epoch/window.
    """
    if train_frame.day_count < config.w:
        raise ValidationError(
            f"training frame has {train_frame.day_count} days, need at least w={config.w}")
    bundle = build_bundle(config, train_frame.tickers)
    if config.is_hybrid and config.proposer_mode == "network":
        bundle.proposer, bundle.proposer_mse = train_proposer(train_frame, config)

    optim = {name: AdamState.for_parameters(net.parameters(), lr=config.lr,
                                            beta1=config.beta1, beta2=config.beta2,
                                            epsilon=config.adam_epsilon)
             for name, net in _trainable_nets(bundle).items()}
    rngs = {
        "conditioner": _rng(config.seed, "dropout", "conditioner"),
        "simulator": _rng(config.seed, "dropout", "simulator"),
        "discriminator": _rng(config.seed, "dropout", "discriminator"),
        "decoder": _rng(config.seed, "dropout", "decoder"),
        "eps": _rng(config.seed, "eps"),
    }
    z_rng = _rng(config.seed, "z")
    shuffle_rng = _rng(config.seed, "shuffle")

    starts = training_index_set(train_frame.day_count, config.w)
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(starts.size)
        gen_losses, ap_losses, critic_losses = [], [], []
        position = 0
        while position < order.size:
            group = order[position:position + config.batch_windows]
            position += group.size
            batch = []
            for k in group:
                window = extract_window(train_frame, int(starts[k]), config.h, config.f)
                stats = window_stats(bundle, window)
                batch.append((_normalized_window(window, stats, config.h),
                              z_rng.standard_normal(config.m)))
            try:
                gen_loss, ap_loss = generator_step(bundle, batch, rngs, optim)
                gen_losses.append(gen_loss)
                if not np.isnan(ap_loss):
                    ap_losses.append(ap_loss)
                for extra in range(config.critic_steps_per_gen):
                    if extra > 0:
                        batch = [(w_, z_rng.standard_normal(config.m)) for w_, _ in batch]
                    critic_losses.append(critic_step(bundle, batch, rngs, optim))
            except NumericFault as fault:
                raise NumericFault(
                    f"training diverged at epoch {epoch}, window start {starts[group[0]]}: "
                    f"{fault}") from fault
        bundle.training_log.append(EpochLog(
            epoch=epoch,
            critic_loss=float(np.mean(critic_losses)),
            generator_loss=float(np.mean(gen_losses)),
            ap_loss=float(np.mean(ap_losses)) if ap_losses else float("nan"),
            proposer_mse=bundle.proposer_mse,
        ))
    bundle.trained = True
    return bundle


def _trainable_nets(bundle: ModelBundle) -> dict[str, MlpNetwork]:
    nets = {"conditioner": bundle.conditioner, "simulator": bundle.simulator,
            "discriminator": bundle.discriminator}
    if bundle.decoder is not None:
        nets["decoder"] = bundle.decoder
    return nets


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------

def _inference_stats(bundle: ModelBundle, prices: np.ndarray, start: int) -> NormStats:
    """Stats for the generation block starting at 1-based day ``start``."""
    h, f = bundle.config.h, bundle.config.f
    historical = prices[:, start - 1 - h:start - 1]
    regime = bundle.config.resolved_regime
    if regime == "eavesdrop":
        return fit_eavesdrop(prices[:, start - 1 - h:start - 1 + f], h,
                             allow_forward_bias=True)
    base = fit_standard(historical)
    if regime == "standard":
        return base
    proposed = _bundle_propose(bundle, historical, base.center)
    return make_hybrid_stats(base.scale, proposed)


def simulate_paths(bundle: ModelBundle, test_frame: PriceFrame, n_draws: int,
                   seed: int = 0, n_jobs: int = 1) -> np.ndarray:
    """Synthesize ``n_draws`` full test-period paths, shape (n_draws, N, K).

    The first h columns of every draw are the observed prices; each
    subsequent f-day block is generated conditioned on the *observed* h days
    before it (never on previously generated values), normalized under the
    bundle's regime, and de-normalized back to price space.  Draw j uses its
    own random stream derived from (seed, j), so draws are independent of
    execution order and may run concurrently.
    """
    if not bundle.trained:
        raise ValidationError("bundle is not trained; run train() or load a trained archive")
    if tuple(test_frame.tickers) != tuple(bundle.tickers):
        raise ValidationError(
            f"test frame tickers {test_frame.tickers} do not match bundle {bundle.tickers}")
    if n_draws < 1:
        raise ValidationError(f"n_draws must be >= 1, got {n_draws}")
    config = bundle.config
    starts = inference_index_set(test_frame.day_count, config.h, config.f)
    prices = test_frame.prices

    def one_draw(j: int) -> np.ndarray:
        rng = _rng(seed, "draw", extra=j)
        path = np.array(prices)
        for start in starts:
            start = int(start)
            stats = _inference_stats(bundle, prices, start)
            historical = prices[:, start - 1 - config.h:start - 1]
            z = rng.standard_normal(config.m)
            code = forward(bundle.conditioner, normalize(historical, stats).ravel(), mode="infer")
            generated = forward(bundle.simulator, ad.concatenate([Tensor(z), code]), mode="infer")
            block = generated.values.reshape(bundle.n_assets, config.f)
            path[:, start - 1:start - 1 + config.f] = denormalize(block, stats)
        return path

    if n_jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            draws = list(pool.map(one_draw, range(n_draws)))
    else:
        draws = [one_draw(j) for j in range(n_draws)]
    return np.stack(draws)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_bundle(path, bundle: ModelBundle) -> None:
    """Write the bundle to a deterministic binary archive."""
    components = {"conditioner": bundle.conditioner, "simulator": bundle.simulator,
                  "discriminator": bundle.discriminator}
    if bundle.decoder is not None:
        components["decoder"] = bundle.decoder
    if bundle.proposer is not None:
        components["proposer"] = bundle.proposer
    meta = {"kind": "model-bundle", "config": asdict(bundle.config),
            "tickers": list(bundle.tickers), "trained": bundle.trained,
            "proposer_mse": None if np.isnan(bundle.proposer_mse) else bundle.proposer_mse}
    save_networks(path, components, meta)


def load_bundle(path) -> ModelBundle:
    """Inverse of :func:`save_bundle` (exact parameter round trip)."""
    components, meta = load_networks(path)
    if meta.get("kind") != "model-bundle":
        raise ValidationError(f"{path}: archive does not contain a model bundle")
    config = TrainConfig(**meta["config"])
    mse = meta.get("proposer_mse")
    return ModelBundle(config=config, tickers=tuple(meta["tickers"]),
                       conditioner=components["conditioner"],
                       simulator=components["simulator"],
                       discriminator=components["discriminator"],
                       decoder=components.get("decoder"),
                       proposer=components.get("proposer"),
                       proposer_mse=float("nan") if mse is None else float(mse),
                       trained=bool(meta.get("trained", False)))
