import numpy as np

from brann import plotting
from brann.classify import ConditionLabel
from brann.network import NetworkLayout, init_weights
from brann.trainers import TrainingConfig, train


def small_trace():
    x = np.linspace(-1, 1, 12).reshape(-1, 1)
    net = init_weights(NetworkLayout.mlp(1, [3], 1), 0)
    return train(net, (x, np.sin(x)), TrainingConfig(max_epochs=10))[1]


class TestFigures:
    def test_every_figure_is_a_png(self, tmp_path):
        trace = small_trace()
        paths = [
            plotting.plot_trace(trace, tmp_path / "t.png", "trace"),
            plotting.plot_regression([0.1, 0.2, 0.3], [0.12, 0.18, 0.33], tmp_path / "r.png"),
            plotting.plot_sweep(["a", "b"], [0.1, 0.2], [0.15, 0.3], tmp_path / "s.png"),
            plotting.plot_ranking(["f0", "f1"], [0.7, 0.3], tmp_path / "k.png"),
            plotting.plot_classification([0.2, 0.7], [ConditionLabel.UNBROKEN, ConditionLabel.BROKEN],
                                         0.6, tmp_path / "c.png"),
        ]
        for p in paths:
            assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_deterministic_bytes(self, tmp_path):
        trace = small_trace()
        a = plotting.plot_trace(trace, tmp_path / "a.png").read_bytes()
        b = plotting.plot_trace(trace, tmp_path / "b.png").read_bytes()
        assert a == b
