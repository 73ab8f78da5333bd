"""Element data used for valence bookkeeping and canonical ranking."""

SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn "
    "Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr"
).split()

ATOMIC_NUMBER = {s: z for z, s in enumerate(SYMBOLS, start=1)}

ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_SYMBOLS = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S",
                    "se": "Se", "as": "As", "te": "Te"}

DEFAULT_VALENCE = {
    "H": (1,), "B": (3,), "C": (4,), "N": (3,), "O": (2,), "F": (1,),
    "Si": (4,), "P": (3, 5), "S": (2, 4, 6), "Cl": (1,), "As": (3, 5),
    "Se": (2, 4, 6), "Br": (1,), "Te": (2, 4, 6), "I": (1, 3, 5), "At": (1,),
}

VALENCE_ELECTRONS = {
    "H": 1, "B": 3, "C": 4, "N": 5, "O": 6, "F": 7, "Si": 4, "P": 5, "S": 6,
    "Cl": 7, "As": 5, "Se": 6, "Br": 7, "Te": 6, "I": 7, "At": 7,
}


def allowed_valences(element: str, charge: int = 0) -> tuple[int, ...] | None:
    """Valences for a possibly charged atom, using the isoelectronic neighbor.

    N+ behaves like C, O- like F, C- like N and so on. Returns None for
    elements without a valence model (metals, noble gases).
    """
    if element not in DEFAULT_VALENCE:
        return None
    if charge == 0:
        return DEFAULT_VALENCE[element]
    z = ATOMIC_NUMBER[element] - charge
    if z < 1 or z > len(SYMBOLS):
        return None
    return DEFAULT_VALENCE.get(SYMBOLS[z - 1])
