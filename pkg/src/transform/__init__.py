"""
坐标变换：尺度函数、自然尺度、端点分类、Kotani 条件与时间变换
"""
from .scale import ScaleFunctionError, ScaleMap, scale_function, to_natural_scale
from .boundary import (
    EndpointClassification,
    KotaniReport,
    KotaniVerdict,
    NotNaturalScaleError,
    classify_endpoint,
    endpoint_integrals,
    kotani_check,
    kotani_condition,
)
from .time_change import time_change_coefficients

__all__ = [
    "ScaleMap",
    "ScaleFunctionError",
    "scale_function",
    "to_natural_scale",
    "EndpointClassification",
    "KotaniReport",
    "KotaniVerdict",
    "NotNaturalScaleError",
    "classify_endpoint",
    "endpoint_integrals",
    "kotani_check",
    "kotani_condition",
    "time_change_coefficients",
]
