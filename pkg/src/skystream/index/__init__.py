"""Searchable document store: inverted index, geo cells, exact aggregations."""

from .geohash import decode, decode_bounds, encode
from .query import (
    Aggregation,
    Bool,
    DateHistogramAgg,
    GeoBbox,
    GeohashGridAgg,
    MalformedQuery,
    MatchAll,
    Query,
    Range,
    StatsAgg,
    Term,
    TermsAgg,
    aggregate,
    aggs_from_json,
    count,
    query_from_json,
    query_to_json,
    search,
    search_response,
)
from .store import (
    DocumentStore,
    FieldType,
    Index,
    IndexExists,
    MappingConflict,
    SnapshotCorrupt,
    StoreError,
    UnknownIndex,
    fields_to_json,
    fold_term,
    infer_field_type,
)

__all__ = [
    "Aggregation",
    "Bool",
    "DateHistogramAgg",
    "DocumentStore",
    "FieldType",
    "GeoBbox",
    "GeohashGridAgg",
    "Index",
    "IndexExists",
    "MalformedQuery",
    "MappingConflict",
    "MatchAll",
    "Query",
    "Range",
    "SnapshotCorrupt",
    "StatsAgg",
    "StoreError",
    "Term",
    "TermsAgg",
    "UnknownIndex",
    "aggregate",
    "aggs_from_json",
    "count",
    "decode",
    "decode_bounds",
    "encode",
    "fields_to_json",
    "fold_term",
    "infer_field_type",
    "query_from_json",
    "query_to_json",
    "search",
    "search_response",
]
