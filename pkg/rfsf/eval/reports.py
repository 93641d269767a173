""" JSON / CSV / gnuplot report writers
"""
import json

import numpy as np
import pandas as pd


def write_json(filename, obj):
    with open(filename, 'w', encoding='utf-8') as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write('\n')


def write_metrics_json(filename, reports, timing=True):
    write_json(filename, dict(reports=[r.to_dict(timing=timing) for r in reports]))


def write_metrics_csv(filename, reports):
    """One row per report: head, accuracy, macro_f1 and per-class precision / recall / F1."""
    rows = []
    for r in reports:
        row = dict(head=r.head, accuracy=r.accuracy, macro_f1=r.macro_f1, total=r.total)
        for i, (p, rc, f) in enumerate(zip(r.precision, r.recall, r.f1)):
            name = r.class_names[i] if r.class_names else str(i)
            row.update({f'precision_{name}': p, f'recall_{name}': rc, f'f1_{name}': f})
        rows.append(row)
    pd.DataFrame(rows).to_csv(filename, index=False, float_format='%.10g')


def write_confusion_csv(filename, cm, class_names=None):
    """K x K grid, rows = true class, columns = predicted."""
    names = list(class_names) if class_names else [str(i) for i in range(cm.shape[0])]
    df = pd.DataFrame(np.asarray(cm), index=names, columns=names)
    df.index.name = 'true\\pred'
    df.to_csv(filename)


def read_confusion_csv(filename):
    return pd.read_csv(filename, index_col=0).to_numpy(dtype=np.int64)


def write_confusion_gnuplot(filename, cm):
    """ 'true pred count' triples, one blank line between rows, for `plot ... with image` """
    cm = np.asarray(cm)
    with open(filename, 'w', encoding='utf-8') as f:
        f.write('# true pred count\n')
        for i in range(cm.shape[0]):
            for j in range(cm.shape[1]):
                f.write(f'{i} {j} {int(cm[i, j])}\n')
            f.write('\n')


def write_table(filename, rows, columns=None):
    pd.DataFrame(rows, columns=columns).to_csv(filename, index=False, float_format='%.10g')


def write_saliency_csv(filename, explanation, class_names=None):
    """instance index, a_j, y_hat_j row, a_j * y_hat_j row"""
    k = explanation.instance_probs.shape[1]
    names = list(class_names) if class_names else [str(i) for i in range(k)]
    rows = []
    for j in range(explanation.attention.shape[0]):
        row = dict(instance=j, attention=float(explanation.attention[j]))
        row.update({f'p_{n}': float(explanation.instance_probs[j, c]) for c, n in enumerate(names)})
        row.update({f'saliency_{n}': float(explanation.saliency[j, c]) for c, n in enumerate(names)})
        rows.append(row)
    pd.DataFrame(rows).to_csv(filename, index=False, float_format='%.17g')
