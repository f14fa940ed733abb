from .export import ResultRepository, format_report_table


__all__ = ["ResultRepository", "format_report_table"]
