"""Smoke test for the python bindings: conjugates, dataset IO, oracles, pipeline."""

import json
import math
import os
import sys
import tempfile

import idrl


def check(cond, msg):
    if not cond:
        print("FAIL:", msg)
        sys.exit(1)


def main():
    # chi-squared conjugate identities
    for x in (0.0, 0.5, 1.0, 2.5):
        check(abs(idrl.f_value(x) - (x - 1.0) ** 2) < 1e-12, "f_value")
        check(abs(idrl.f_prime_inv(idrl.f_prime(x)) - x) < 1e-12, "f_prime_inv")
    check(abs(idrl.f_p_star(2.0) - 2.0 * (2.0 / 4.0 + 1.0)) < 1e-12, "f_p_star")
    check(idrl.f_p_star(-3.0) == -1.0, "f_p_star clamp")
    check(idrl.f_p_star_prime(-3.0) == 0.0, "f_p_star_prime clamp")

    with tempfile.TemporaryDirectory() as tmp:
        # dataset generation + IO round trip
        path = os.path.join(tmp, "rand.jsonl")
        idrl.gen_dataset(path, policy="random", n=300, seed=11)
        info = idrl.dataset_info(path)
        check(info["count"] == 300, "dataset count")
        check(info["obs_dim"] == 2 and info["act_dim"] == 2, "dataset dims")
        check(info["content_hash"] != 0, "content hash")

        expert = os.path.join(tmp, "expert.jsonl")
        idrl.gen_dataset(expert, policy="expert", n=200, seed=12, epsilon=0.1)
        mixed = os.path.join(tmp, "mix.jsonl")
        idrl.mix_files(expert, path, 0.5, 400, 13, mixed)
        check(idrl.dataset_info(mixed)["count"] == 400, "mix count")

        # exact oracle on a 2-state MDP: visitation sums to 1, regularized
        # solution satisfies the flow constraint
        P = [[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 0.0]]]
        R = [[1.0, 0.0], [0.0, 0.0]]
        d0 = [1.0, 0.0]
        d = idrl.exact_visitation(2, 2, P, R, d0, 0.9,
                                  [[0.5, 0.5], [0.5, 0.5]])
        check(abs(sum(d) - 1.0) < 1e-9, "visitation normalization")
        sol = idrl.exact_regularized_solution(2, 2, P, R, d0, 0.9, d, 1.0)
        check(sol["flow_residual"] < 1e-6, "flow residual")
        rounds = idrl.check_monotonicity(2, 2, P, R, d0, 0.9, d, 1.0, 4)
        check(all(b + 1e-9 >= a for a, b in zip(rounds, rounds[1:])),
              "filtering monotonicity")

        # tiny end-to-end pipeline run through the config JSON interface
        cfg = json.loads(idrl.default_config_json())
        cfg["dataset"] = path
        cfg["iterations"] = 1
        cfg["n1"] = 300
        cfg["n2"] = 300
        cfg["bc_steps"] = 300
        cfg["backend"] = "tabular"
        cfg["lr"] = 0.01
        cfg["reward_shift"] = 2.0
        cfg["eval_episodes"] = 5
        out = idrl.run_pipeline(json.dumps(cfg))
        check(out["final_size"] > 0, "pipeline retained transitions")
        check(len(out["reports"]) == 1, "pipeline report count")
        check(math.isfinite(out["eval_return"]), "pipeline eval return")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
