"""Unit tests for services package"""
