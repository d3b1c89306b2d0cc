from csal_classifier.evaluation.metrics import best_cluster_mapping, classification_accuracy, confusion_counts

__all__ = ['best_cluster_mapping', 'classification_accuracy', 'confusion_counts']
