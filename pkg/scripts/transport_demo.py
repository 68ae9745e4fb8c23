"""Build the six-block transport chain and print its diagnostics.

Exits 2 when the construction fails, after printing what was measured.
"""
import json
import sys

from projektor.errors import ChainDegraded, ConstructionFailed
from projektor.transport import build_chain, default_epsilons, reference_ladder_chain


def main():
    eps = default_epsilons(6)
    _, _, ref = reference_ladder_chain(eps)
    print(f"ladder-only reference loss: {ref:.6g} (budget {2 * sum(eps):.6g})")
    try:
        plan = build_chain(eps)
    except (ConstructionFailed, ChainDegraded) as exc:
        print(f"{exc.code}: {exc}")
        print(json.dumps(exc.diagnostics, indent=1, default=str))
        plan = build_chain(eps, verify=False, strict=False)
        print(json.dumps(plan.to_json(), indent=1))
        return 2
    print(json.dumps(plan.to_json(), indent=1))
    return 0


if __name__ == "__main__":
    sys.exit(main())
