"""Semi-supervised node classification with four models.

A planted-partition graph stands in for a citation network: nodes are
documents with sparse word flags, edges mostly join documents of the same
class. Only 15 labels per class are visible during training.

Run: python demos/02_node_classification.py
"""
from graphdr.data import make_split, planted_partition_dataset
from graphdr.metrics import classification_report
from graphdr.models import KINDS, ModelSpec, count_parameters, forward, prepare_graph
from graphdr.trainer import TrainConfig, train

ds = planted_partition_dataset(n_per_class=150, num_classes=5, num_features=300, p_in=0.03, p_out=0.002,
                               words_per_node=12, topic_strength=0.5, seed=1)
split = make_split(ds, per_class=15, n_val=150, n_test=300)
print(f"{ds.n} nodes, {ds.num_edges} edges, {ds.num_features} word flags, {ds.num_classes} classes")
print("train/val/test:", split.sizes())
graph = prepare_graph(ds.edges, ds.features)

print(f"\n{'model':<10} {'params':>7} {'epochs':>6} {'best':>5} {'acc':>6} {'macro F1':>8}")
for kind in KINDS:
    spec = ModelSpec(kind, ds.num_features, ds.num_classes)
    # GraphConv sums raw neighbour features, so it trains at a smaller rate
    params, history = train(spec, ds, split, TrainConfig.for_kind(kind, seed=0))
    rep = classification_report(forward(spec, params, graph), ds.labels, split.test)
    print(f"{kind:<10} {count_parameters(spec):>7} {history.epochs:>6} {history.best_epoch:>5} "
          f"{rep.accuracy:>6.1f} {rep.f1:>8.1f}")

# Graph-aware models beat the MLP here because neighbours share labels; the
# MLP only sees each document's own words.
