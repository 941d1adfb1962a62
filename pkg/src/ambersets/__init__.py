"""Entity-ambiguity benchmark sets and retrieval evaluation.

Mines names shared by several knowledge-graph entities, keeps the properties
that tell those entities apart, aligns them to corpus documents, and turns
them into fact-checking, slot-filling and question-answering queries. The
metrics module scores retriever rankings against those queries.
"""

from .corpus import DocumentIndex, DocumentRecord, parse_document, value_in_prefix
from .errors import AmberError, ConfigError, ContractError, ParseError, RunValidationError
from .kg import AliasIndex, EntityRecord, FactTuple, build_alias_index, parse_entity_record
from .metrics import (
    MetricsReport,
    Ratio,
    accuracy_at_k,
    aggregate_report,
    all_correct,
    entity_confusion,
    is_confused,
    popularity_gap_report,
)
from .popularity import (
    DEFAULT_GAP_BINS,
    GapBin,
    PopularityTable,
    assign_gap_bin,
    assign_head_tail,
    load_pageviews,
    popularity_gap,
)
from .queries import (
    GlobalValueStats,
    TaskQuery,
    TemplateBank,
    generate_queries,
    load_template_bank,
    most_popular_alternative,
)
from .report import emit_report
from .retrieval import RetrieverRun, SparseIndex, build_index, load_external_run, retrieve
from .sets import AmberSet, CollectionSpec, build_sets, load_collection_specs

__version__ = "0.1.0"
