import os

BASE_OUT_DIR = 'out'
TEST_OUT_DIR = os.path.join(BASE_OUT_DIR, 'tests')
PROFILES_DIR = 'profiles'
CIRCUITS_DIR = 'circuits'
SHOT_LOG = 'shots.jsonl'
JOB_INDEX = 'jobs.json'
MODEL_FILE = 'model.json'
SCENARIO_FILE = 'scenario.json'
TRAIN_REPORT = 'train_report.json'
VERIFY_TABLE = 'verify.csv'
CURVE_TABLE = 'curve.csv'
PAIRS_TABLE = 'pairs.csv'
CLUSTER_REPORT = 'cluster_report.json'
DRIFT_TABLE = 'drift.csv'
CAUSAL_TABLE = 'causal.csv'
CAUSAL_PAIRS_TABLE = 'causal_pairs.csv'
SPECIFICITY_TABLE = 'specificity.csv'
METRICS_TABLE = 'table.csv'
STATES_TABLE = 'states.csv'
