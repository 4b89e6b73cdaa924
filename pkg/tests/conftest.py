import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from ganfolio.synthetic import gbm_prices


def make_price_matrix(n_assets=3, n_days=120, seed=0):
    return gbm_prices(n_assets, n_days, seed)
