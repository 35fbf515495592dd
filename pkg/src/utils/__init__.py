from .json_parsing import (
    MissingRequiredKeysError,
    format_parse_error,
    parse_json_document,
    validate_required_keys,
)

__all__ = ['parse_json_document', 'format_parse_error', 'validate_required_keys', 'MissingRequiredKeysError']
