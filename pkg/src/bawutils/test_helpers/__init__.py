from .synthetic_spectra import SpectrumSimulator, write_impedance_csv, write_s1p
