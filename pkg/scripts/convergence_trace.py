"""Print the doubling trace of the swap-count heuristic for each null model.

    python3 scripts/convergence_trace.py --dataset planted --seed 1
"""

import argparse

from exchmine.clustering import kmeans
from exchmine.datasets import planted_dataset, toy_clustering, toy_dataset
from exchmine.nullmodels import NullModel, choose_swap_count
from exchmine.patterns import ItemsetFamily, mine_frequent


def models(name, D):
    if name == "toy":
        C = toy_clustering()
        F = ItemsetFamily([(0, 1), (1, 7)]).with_targets(D)
    else:
        C = kmeans(D, 4, seed=0)
        # pairs only: single-column frequencies are already fixed by the margins
        F = ItemsetFamily([X for X in mine_frequent(D, 20, 2) if len(X) == 2]).with_targets(D)
    return {"margins": NullModel.margins(), "cluster-margins": NullModel.cluster_margins(C),
            "itemset-soft": NullModel.itemset_soft(F)}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dataset", choices=("toy", "planted"), default="toy")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    D = toy_dataset() if args.dataset == "toy" else planted_dataset()
    print(f"{args.dataset}: {D.shape[0]}x{D.shape[1]}, {D.n_ones} ones")
    for name, model in models(args.dataset, D).items():
        history = []
        K = choose_swap_count(D, model, args.seed, history)
        print(f"\n{name}: K = {K} ({K // D.n_ones} x ones)")
        print("K\tmean distance\tdistances")
        for h in history:
            print(f"{h['K']}\t{h['mean']:.1f}\t{h['distances']}")


if __name__ == "__main__":
    main()
