#pragma once

// Signal and crosstalk accounting on a unidirectional ring waveguide. A
// channel's signal is injected at its source ONI's exit, attenuated per
// segment, filtered by every receiver ring it crosses (in layout order), and
// terminates at its own receiver. Powers in mW, lengths in cm.

#include <string>
#include <vector>

#include "photonoc/photonics.hpp"

namespace photonoc::snr {

struct Channel {
    int id = 0;
    int source = 0;  // ONI position on the ring, 0..n-1
    int dest = 0;
    double nominal_wavelength_nm = 1550.0;
    double injected_mw = 0.0;  // OP_net of the transmitter
};

struct RingNetwork {
    int n_onis = 0;
    std::vector<double> segment_cm;         // n_onis entries; [p] spans p -> p+1 (mod n)
    std::vector<double> oni_temperature_c;  // n_onis entries
    std::vector<Channel> channels;
    double propagation_loss_db_cm = 0.5;
    photonics::MrModel mr;
    photonics::ThermoOpticModel thermo;
    double noise_floor_mw = 1e-12;
    double snr_ceiling_db = 120.0;
    double sensitivity_dbm = -20.0;

    // Checks ring shape, channel endpoints, and the wavelength reuse rule:
    // channels sharing a nominal wavelength must occupy disjoint segment
    // sets. Throws ValidationError.
    void validate() const;
    double ring_length_cm() const;
};

// One power transfer out of a propagating signal: a drop into some
// receiver (receiver identified by the channel it serves).
struct DropEvent {
    int receiver_channel = 0;
    int at_position = 0;
    double power_mw = 0.0;
};

// Where every injected milliwatt of one channel went.
struct PowerLedger {
    int channel = 0;
    double injected_mw = 0.0;
    std::vector<DropEvent> drops;     // own receiver included (last entry)
    double propagation_loss_mw = 0.0; // dissipated along segments
    double residual_mw = 0.0;         // continues past the destination receiver
    double signal_mw = 0.0;           // power dropped at the channel's own receiver

    // |injected - (drops + propagation + residual)| / injected
    double conservation_error() const;
};

// Closed-form accounting: each event's incident power is the injected power
// times the product of all upstream segment and through factors.
PowerLedger propagate_channel(const RingNetwork& net, const Channel& ch);

// Independent check: event-by-event march with exact rational arithmetic on
// the same factors. Test oracle; not used by the production path.
PowerLedger oracle_propagate(const RingNetwork& net, const Channel& ch);

// noise[i] = sum of power dropped into channel i's receiver by every other
// channel. Indexed like net.channels.
std::vector<double> crosstalk_matrix(const RingNetwork& net, const std::vector<PowerLedger>& ledgers);

struct SnrRow {
    int channel = 0, source = 0, dest = 0;
    double wavelength_nm = 0;  // resolved signal wavelength
    double signal_mw = 0;
    double noise_mw = 0;
    double snr_db = 0;
    bool sensitivity_ok = false;
    bool noise_free = false;  // noise below the floor; snr_db capped
    bool no_signal = false;   // zero signal; snr_db undefined, reported as 0
};

struct SnrReport {
    std::vector<SnrRow> rows;
    std::vector<PowerLedger> ledgers;
    double worst_snr_db = 0.0;  // min over channels with a defined SNR
};

SnrReport evaluate(const RingNetwork& net);

void write_report_csv(const SnrReport& report, const std::string& path);
void write_ledger_csv(const SnrReport& report, const std::string& path);

}  // namespace photonoc::snr
