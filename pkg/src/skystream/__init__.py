"""skystream: a self-contained real-time flight analytics pipeline.

One process hosts the whole path: a synthetic (or API-fed) flight position
source, an embedded partitioned commit log, a micro-batch stream processor
with event-time windows, an inverted-index document store, an HTTP query
service, and a historical on-time analytics batch job.
"""

__version__ = "0.1.0"
