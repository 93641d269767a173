""" k-nearest-neighbour sanity baseline on flattened bags
"""
import logging

import numpy as np
from sklearn.neighbors import NearestNeighbors

from rfsf.common.errors import ContractError
from rfsf.common.metrics import confusion_matrix, metrics

_logger = logging.getLogger(__name__)


def knn_predict(train_x, train_y, test_x, k, num_classes):
    """ Majority vote of the k nearest (Euclidean) training points

    Ties go to the class with the smallest summed neighbour distance, then the smallest class index.
    """
    if k < 1 or k % 2 == 0:
        raise ContractError(f'k must be a positive odd number, got {k}')
    if k > train_x.shape[0]:
        raise ContractError(f'k={k} exceeds the {train_x.shape[0]} training bags')
    nn = NearestNeighbors(n_neighbors=k, metric='euclidean', algorithm='brute').fit(train_x)
    dist, idx = nn.kneighbors(test_x)
    neighbour_labels = train_y[idx]
    preds = np.empty(test_x.shape[0], dtype=np.int64)
    for i in range(test_x.shape[0]):
        votes = np.bincount(neighbour_labels[i], minlength=num_classes)
        dist_sum = np.bincount(neighbour_labels[i], weights=dist[i], minlength=num_classes)
        candidates = np.flatnonzero(votes == votes.max())
        # lexsort: last key is primary, so distance sum first and class index second
        preds[i] = candidates[np.lexsort((candidates, dist_sum[candidates]))[0]]
    return preds


def knn_baseline(train_set, test_set, k=1):
    """MetricsReport of a k-NN classifier over flattened bag vectors."""
    train_x = train_set.instances.reshape(len(train_set), -1)
    test_x = test_set.instances.reshape(len(test_set), -1)
    preds = knn_predict(train_x, train_set.labels, test_x, k, train_set.num_classes)
    cm = confusion_matrix(preds, test_set.labels, train_set.num_classes)
    report = metrics(cm, head=f'knn{k}', class_names=train_set.class_names)
    _logger.info(f'k-NN (k={k}) accuracy: {report.accuracy:.4f}, macro-F1: {report.macro_f1:.4f}')
    return report
