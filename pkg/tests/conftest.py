import json
from pathlib import Path

import pytest

from sidewidth import synth
from sidewidth.config import PipelineConfig

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

# Quarter-resolution camera for tests where speed matters more than the
# last few millimetres of boundary quantization.
SMALL_CAM = dict(width=224, height=416, fx=150.0, fy=375.0)


def small_camera():
    return synth.default_camera(**SMALL_CAM)


def load_truth(bench_dir) -> dict:
    return json.loads((Path(bench_dir) / "truth.json").read_text())


@pytest.fixture(scope="session")
def cfg():
    return PipelineConfig()


@pytest.fixture(scope="session")
def bench_small(tmp_path_factory):
    """Six noise-free scenes at reduced resolution, with depth tensors."""
    out = tmp_path_factory.mktemp("bench_small")
    manifest = synth.generate_benchmark(6, (1.0, 3.5), 1234, out,
                                        cam=small_camera(), with_depth=True)
    return manifest
