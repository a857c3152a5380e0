import numpy as np
import pytest

from kernelverify.network import Dense, Network, ReLU


def naive_conv(image, kernel, pad_before, pad_after):
    """Loop-based cross-correlation on a single 2-D plane."""
    image = np.asarray(image, dtype=float)
    s = kernel.shape[0]
    padded = np.zeros((image.shape[0] + pad_before + pad_after, image.shape[1] + pad_before + pad_after))
    padded[pad_before:pad_before + image.shape[0], pad_before:pad_before + image.shape[1]] = image
    oh, ow = padded.shape[0] - s + 1, padded.shape[1] - s + 1
    out = np.zeros((oh, ow))
    for i in range(oh):
        for j in range(ow):
            acc = 0.0
            for k in range(s):
                for l in range(s):
                    acc += padded[i + k, j + l] * kernel[k, l]
            out[i, j] = acc
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_net(rng, input_shape=(1, 4, 4), widths=(6,), classes=3):
    n = int(np.prod(input_shape))
    layers = []
    for w in widths:
        layers += [Dense(rng.normal(size=(w, n)) / np.sqrt(n), rng.normal(size=w) * 0.1), ReLU()]
        n = w
    layers.append(Dense(rng.normal(size=(classes, n)), rng.normal(size=classes) * 0.1))
    return Network("tiny", input_shape, layers)


# --- acceptance report ----------------------------------------------------

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def report():
    """Record ``(criterion, passed, detail)``; printed in the terminal summary."""

    def record(criterion, passed, detail=""):
        ACCEPTANCE_RESULTS[criterion] = (bool(passed), detail)
        print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
