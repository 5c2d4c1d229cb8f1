//! Optical channels: the Gaussian downlink beam, the omnidirectional uplink
//! and the corner-cube return path used for passive beam activation.

mod beam;
mod ccr;
mod uplink;

pub use beam::{
    beam_width, downlink_powers, gaussian_intensity, received_power_downlink, BeamParams,
    DownlinkPower, RxAperture,
};
pub use ccr::{
    ccr_active_area_fraction, ccr_displacement, ccr_refraction, circle_overlap_area,
    rxap_power_matrix, rxap_readings, CcrParams, RxapReading,
};
pub use uplink::{
    default_pd_constellation, received_power_uplink, received_power_uplink_single_led, CeilingPd,
    OdtxParams,
};
