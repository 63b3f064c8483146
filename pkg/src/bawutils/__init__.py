"""Design and analysis toolkit for thickness-extensional piezoelectric bulk acoustic resonators"""
__version__ = "1.0.0"
