from csal_classifier.storage.result_storage import RESULT_COLUMNS, ResultSink, RunStorage, cell_key, load_params

__all__ = ['RESULT_COLUMNS', 'ResultSink', 'RunStorage', 'cell_key', 'load_params']
