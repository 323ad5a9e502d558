"""Wire formats and the in-memory message fabric members talk over"""
