# Core infrastructure: errors, metrics, decorators, worker pool, fits
