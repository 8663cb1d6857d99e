import numpy as np
import pytest

ACCEPTANCE_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        ACCEPTANCE_RESULTS[marker.args[0]] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, status in ACCEPTANCE_RESULTS.items():
            terminalreporter.write_line(f"[{status}] {name}")

from protoseq.data import MotifSpec, Sequence, generate_synthetic
from protoseq.encoder import Encoder, EncoderConfig
from protoseq.model import PrototypeModel
from protoseq.objective import Hyperparams


def finite_difference(loss_fn, params: dict, eps: float = 1e-5) -> dict:
    """Central finite differences of loss_fn() w.r.t. every entry of every
    parameter tensor (mutates values in place, restores them)."""
    out = {}
    for name, tensor in params.items():
        grad = np.zeros_like(tensor.value)
        it = np.nditer(tensor.value, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = tensor.value[idx]
            tensor.value[idx] = orig + eps
            fp = loss_fn()
            tensor.value[idx] = orig - eps
            fm = loss_fn()
            tensor.value[idx] = orig
            grad[idx] = (fp - fm) / (2 * eps)
        out[name] = grad
    return out


def max_rel_error(analytic: dict, numeric: dict, floor: float = 1e-7) -> float:
    worst = 0.0
    for name in numeric:
        a, n = analytic[name], numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def tiny_model(rng):
    """k=2, m=3, C=2 token model on a 5-word vocabulary."""
    config = EncoderConfig(
        cell="lstm", hidden=3, layers=1, step_kind="token", input_width=5, embed_dim=4
    )
    encoder = Encoder(config, rng)
    return PrototypeModel(encoder, 2, 2, "multiclass", rng=rng)


@pytest.fixture
def tiny_batch():
    return [
        Sequence(np.array([1, 2, 3]), 0, ["a", "b", "c"]),
        Sequence(np.array([4, 2]), 1, ["d", "b"]),
    ]


@pytest.fixture
def small_synthetic():
    spec = MotifSpec(num_classes=4, vocab_size=50, motif_length=3, seed=7)
    return generate_synthetic(spec, 300, n_test=100)


def small_hp(**overrides) -> Hyperparams:
    base = dict(k=8, epochs=8, hidden=24, embed_dim=24, batch_size=32, cell="gru")
    base.update(overrides)
    return Hyperparams(**base)
