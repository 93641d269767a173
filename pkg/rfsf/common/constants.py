from scipy.constants import speed_of_light

SPEED_OF_LIGHT = float(speed_of_light)  # 299,792,458 m/s

STATIONARY = 'stationary'
HOVERING = 'hovering'
FLYING = 'flying'

_SYNTH3 = ('ON', 'HO', 'FY')

_DRONERF10 = (
    'BG',
    'BEBOP_ON', 'BEBOP_HO', 'BEBOP_FY', 'BEBOP_VR',
    'AR_ON', 'AR_HO', 'AR_FY', 'AR_VR',
    'PHANTOM_ON',
)

_DRONEDETECT_DRONES = ('AIR', 'MP1', 'MP2', 'INS', 'MIN', 'PHA', 'DIS')
_DRONEDETECT21 = tuple(f'{d}_{m}' for d in _DRONEDETECT_DRONES for m in _SYNTH3)

LABEL_SETS = dict(
    SYNTH3=_SYNTH3,
    DRONERF10=_DRONERF10,
    DRONEDETECT21=_DRONEDETECT21,
)

# class-name suffix -> kinematic class, background and switched-on captures are stationary
_MODE_KINEMATICS = dict(
    BG=STATIONARY,
    ON=STATIONARY,
    HO=HOVERING,
    FY=FLYING,
    VR=FLYING,
)

DEFAULT_DISC_CHANNELS = (16, 32, 64, 128, 128)
DEFAULT_CNN_GEN_CHANNELS = (64, 32, 16, 8)


def get_label_set(name):
    name = name.upper()
    if name not in LABEL_SETS:
        return None
    return LABEL_SETS[name]


def list_label_sets():
    return list(LABEL_SETS.keys())


def kinematic_class(class_name):
    """Map a class name (e.g. 'HO', 'MP1_FY', 'BEBOP_VR') to its kinematic class or None."""
    mode = class_name.upper().rsplit('_', 1)[-1]
    return _MODE_KINEMATICS.get(mode)
