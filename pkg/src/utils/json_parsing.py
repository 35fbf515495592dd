"""
JSON文档解析工具模块

提供问题文件等JSON文档的解析函数，解析失败时给出带行列位置的结构化错误。
"""
import json
from typing import Dict, Any, List, Optional


def parse_json_document(
    text: str,
    required_keys: Optional[List[str]] = None,
    source: str = "<string>",
) -> Dict[str, Any]:
    """
    解析JSON文档文本

    文档必须是一个JSON对象；之后可选地验证必需的键是否存在。

    返回统一的结构化格式：

    成功时：
    {
        "success": True,
        "data": {解析后的JSON对象}
    }

    失败时：
    {
        "success": False,
        "error": {
            "type": "错误类型 (JSONDecodeError|ValueError|MissingRequiredKeysError)",
            "message": "具体错误信息",
            "source": "文档来源（文件路径）",
            "line": "出错行号（1起，仅语法错误时有效）",
            "column": "出错列号（1起，仅语法错误时有效）",
            "position": "出错字符偏移（仅语法错误时有效）",
            "expected_keys": "required_keys参数的值（仅在键验证失败时出现）",
            "found_keys": "实际找到的键列表（仅在键验证失败时出现）",
            "missing_keys": "缺失的键列表（仅在键验证失败时出现）"
        }
    }

    参数:
        text (str): JSON文档文本
        required_keys (Optional[List[str]]): 必需的顶层键，默认为None（不验证）
        source (str): 文档来源，用于错误信息

    返回:
        Dict[str, Any]: 包含success标志和data/error的字典

    示例:
        >>> result = parse_json_document('{"beta": 0.1}', required_keys=["beta"])
        >>> result["data"]["beta"]
        0.1
        >>> bad = parse_json_document('{"beta": }')
        >>> bad["error"]["line"], bad["error"]["column"]
        (1, 10)
    """
    try:
        json_data = json.loads(text)

        if not isinstance(json_data, dict):
            raise ValueError(f"文档顶层必须是JSON对象，实际为 {type(json_data).__name__}")

        if required_keys is not None:
            validate_required_keys(json_data, required_keys)

        return {
            "success": True,
            "data": json_data
        }

    except (json.JSONDecodeError, ValueError) as e:
        error_info: Dict[str, Any] = {
            "type": type(e).__name__,
            "message": str(e),
            "source": source,
            "line": None,
            "column": None,
            "position": None,
        }

        if isinstance(e, json.JSONDecodeError):
            error_info["message"] = e.msg
            error_info["line"] = e.lineno
            error_info["column"] = e.colno
            error_info["position"] = e.pos

        if isinstance(e, MissingRequiredKeysError):
            error_info["expected_keys"] = e.expected_keys
            error_info["found_keys"] = e.found_keys
            error_info["missing_keys"] = e.missing_keys

        return {
            "success": False,
            "error": error_info
        }


def format_parse_error(error: Dict[str, Any]) -> str:
    """把结构化错误转成一行可读信息，例如 ``problem.json:3:14: Expecting value``"""
    where = error.get("source", "<string>")
    if error.get("line") is not None:
        where = f"{where}:{error['line']}:{error['column']}"
    return f"{where}: {error['message']}"


def validate_required_keys(
    json_data: Dict[str, Any],
    required_keys: List[str],
) -> None:
    """
    验证JSON数据是否包含所有必需的键

    异常:
        MissingRequiredKeysError: 当缺少必需的键时抛出
    """
    found_keys = set(json_data.keys())
    missing_keys = set(required_keys) - found_keys

    if missing_keys:
        raise MissingRequiredKeysError(
            expected_keys=required_keys,
            found_keys=sorted(found_keys),
            missing_keys=sorted(missing_keys)
        )


class MissingRequiredKeysError(ValueError):
    """当JSON缺少必需的键时抛出"""

    def __init__(self, expected_keys: List[str], found_keys: List[str], missing_keys: List[str]):
        self.expected_keys = expected_keys
        self.found_keys = found_keys
        self.missing_keys = missing_keys
        message = (
            f"JSON缺少必需的键。"
            f"期望的键: {expected_keys}, "
            f"实际找到的键: {found_keys}, "
            f"缺失的键: {missing_keys}"
        )
        super().__init__(message)
