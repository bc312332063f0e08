"""Protocol-conformance acceptance: the attack toolkit's remote client
against a live instance of this server.

    pytest server/tests/test_server_acceptance.py -v -s
"""

import socket
import threading
import time
from pathlib import Path

import numpy as np
import pytest
import requests
import uvicorn

from oracle_server.app import create_app
from oracle_server.weights import load_model

from perturbo.boundary import SearchParams
from perturbo.core import AttackTask, LowDimPoint, Sample, normalize_direction
from perturbo.engine import BOConfig, run_attack
from perturbo.errors import ProtocolViolation
from perturbo.generators import GeneratorSpec, generate
from perturbo.oracles import (MlpLayer, MlpOracle, MlpWeights, RemoteOracle,
                              write_weights)

REPO_ROOT = Path(__file__).resolve().parents[2]
FIXTURE_DIR = REPO_ROOT / "tests" / "fixtures" / "mlp16"


class LiveServer:
    """uvicorn in a daemon thread on an ephemeral port."""

    def __init__(self, app):
        self._config = uvicorn.Config(app, host="127.0.0.1", port=0,
                                      log_level="error")
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def __enter__(self) -> str:
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server failed to start")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc):
        self._server.should_exit = True
        self._thread.join(timeout=10)


def report(name):
    print(f"\n[ACCEPTANCE] {name}: PASS")


class TestProtocolConformance:
    def test_remote_labels_match_in_process_oracle_on_fixtures(self):
        model = load_model(FIXTURE_DIR / "weights.mlpw")
        in_process = MlpOracle.from_file(FIXTURE_DIR / "weights.mlpw")
        inputs = np.load(FIXTURE_DIR / "inputs.npy")
        with LiveServer(create_app(model)) as url:
            remote = RemoteOracle.connect(url)
            assert remote.input_shape == in_process.input_shape
            assert remote.num_classes == in_process.num_classes
            for row in inputs:
                sample = Sample(row, (16, 16, 1))
                assert remote.classify(sample) == in_process.classify(sample)
        report("remote labels identical to in-process oracle on bundled fixtures")

    def test_malformed_requests_get_400(self):
        model = load_model(FIXTURE_DIR / "weights.mlpw")
        with LiveServer(create_app(model)) as url:
            bad_json = requests.post(url + "/classify", data="{",
                                     headers={"Content-Type": "application/json"},
                                     timeout=5)
            assert bad_json.status_code == 400
            bad_shape = requests.post(
                url + "/classify",
                json={"sample": [0.0] * 64, "shape": [8, 8, 1]}, timeout=5)
            assert bad_shape.status_code == 400
            missing = requests.post(url + "/classify", json={"shape": [16, 16, 1]},
                                    timeout=5)
            assert missing.status_code == 400
            # The client maps non-200 answers to a protocol error.
            remote = RemoteOracle(url, (8, 8, 1), 2)
            with pytest.raises(ProtocolViolation):
                remote.classify(Sample(np.zeros(64), (8, 8, 1)))
        report("malformed requests answered with 400")

    def test_full_remote_attack_reproduces_in_process_distances(self, tmp_path):
        # A halfspace encoded as a single-layer net: logits (0, w.x - b),
        # so class 1 iff w.x > b with the lowest-index tie-break.
        dim, shape = 256, (16, 16, 1)
        spec = GeneratorSpec.make("gabor", shape, seed=9)
        x0 = Sample(np.full(dim, 4.0 / 7.0), shape)
        w = normalize_direction(
            generate(spec, LowDimPoint(np.array([0.2, 0.75, 0.3, 0.85]))).values,
            shape).values
        b = float(w @ x0.values) + 0.3
        wmat = np.vstack([np.zeros(dim), w]).astype(np.float32)
        bias = np.array([0.0, -b], dtype=np.float32)
        weights = MlpWeights(input_shape=shape,
                             layers=(MlpLayer(wmat, bias, "none"),))
        weights_path = tmp_path / "halfspace.mlpw"
        write_weights(weights, weights_path)

        in_process = MlpOracle.from_file(weights_path)
        search = SearchParams.defaults(dim)
        model = load_model(weights_path)
        with LiveServer(create_app(model)) as url:
            remote = RemoteOracle.connect(url)
            for seed in range(3):
                local_task = AttackTask(origin=x0, true_label=0,
                                        oracle=in_process, budget=250)
                remote_task = AttackTask(origin=x0, true_label=0,
                                         oracle=remote, budget=250)
                bo = BOConfig(init_samples=5, rng_seed=seed)
                local = run_attack(local_task, spec, bo, search)
                viaweb = run_attack(remote_task, spec, bo, search)
                assert abs(local.distance_l2 - viaweb.distance_l2) <= search.epsilon_bin, \
                    (seed, local.distance_l2, viaweb.distance_l2)
                assert local.queries_used == viaweb.queries_used
        report("full remote attack reproduces in-process distances "
               "(3 seeds, within epsilon_bin)")
