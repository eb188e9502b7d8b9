"""Smoke test for the tpc extension module."""

import math
import os
import tempfile

import tpc


def main():
    rho = tpc.ideal_state(1, "minus", 0.0)
    assert len(rho) == 4
    assert abs(sum(rho[k][k][0] for k in range(4)) - 1.0) < 1e-12

    for g, v in tpc.stabilizers(2):
        assert abs(v - 1.0) < 1e-9, (g, v)

    assert abs(tpc.chain_rate(0.4, 1e-5, 3) - 6400.0) < 1e-6
    assert abs(tpc.fidelity_bound([0.0, 0.5, 0.5, 0.0], 1.0) - 1.0) < 1e-12

    cfg = tpc.Config()
    cfg.zpl_efficiency = 0.05
    cfg.validate()
    again = tpc.Config(cfg.to_toml())
    assert math.isclose(again.zpl_efficiency, 0.05)

    recs = tpc.simulate(cfg, 20000, seed=3)
    assert len(recs) > 0
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "records.csv")
        recs.write_csv(path)
        back = tpc.Records.read_csv(path)
        assert len(back) == len(recs)
    result = tpc.analyze(recs, cfg)
    print("c_xx_corrected =", result["corrected"]["c_xx"])
    print("smoke test ok")


if __name__ == "__main__":
    main()
