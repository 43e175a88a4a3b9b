"""Test suite for limit_dimension"""
