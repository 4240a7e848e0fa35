#include "photonoc/snr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <boost/multiprecision/cpp_int.hpp>

#include "photonoc/common.hpp"

namespace photonoc::snr {

namespace {

using Rational = boost::multiprecision::cpp_rational;

double segment_factor(double loss_db_cm, double length_cm) {
    return std::pow(10.0, -loss_db_cm * length_cm / 10.0);
}

// Receiver indices (into net.channels) listening at ring position m, in
// layout order. Layout order along the waveguide inside an ONI is ascending
// channel id.
std::vector<size_t> receivers_at(const RingNetwork& net, int m) {
    std::vector<size_t> out;
    for (size_t i = 0; i < net.channels.size(); i++)
        if (net.channels[i].dest == m) out.push_back(i);
    std::sort(out.begin(), out.end(), [&](size_t a, size_t b) {
        return net.channels[a].id < net.channels[b].id;
    });
    return out;
}

double resolved_wavelength(const RingNetwork& net, double nominal_nm, int position) {
    double t = net.oni_temperature_c[position];
    if (std::isnan(t))
        throw ValidationError(strfmt("ONI position %d has no temperature; wavelength unresolved",
                                     position));
    return photonics::wavelength_at(net.thermo, nominal_nm, t);
}

// The ordered multiplicative events a channel experiences: segments and
// receiver crossings, ending at its own receiver.
struct Event {
    enum class Kind { Segment, Receiver } kind;
    int position = 0;       // segment start / receiver ONI
    size_t receiver = 0;    // index into net.channels (Receiver only)
    double factor = 0.0;    // surviving fraction (segment loss or 1 - drop)
    double drop_ratio = 0;  // Receiver only
};

std::vector<Event> walk_events(const RingNetwork& net, const Channel& ch) {
    double lambda_sig = resolved_wavelength(net, ch.nominal_wavelength_nm, ch.source);
    std::vector<Event> events;
    int p = ch.source;
    for (int hop = 0; hop < net.n_onis; hop++) {
        Event seg;
        seg.kind = Event::Kind::Segment;
        seg.position = p;
        seg.factor = segment_factor(net.propagation_loss_db_cm, net.segment_cm[p]);
        events.push_back(seg);
        p = (p + 1) % net.n_onis;
        for (size_t ri : receivers_at(net, p)) {
            const Channel& rc = net.channels[ri];
            double lambda_res = resolved_wavelength(net, rc.nominal_wavelength_nm, rc.dest);
            Event ev;
            ev.kind = Event::Kind::Receiver;
            ev.position = p;
            ev.receiver = ri;
            ev.drop_ratio = photonics::mr_drop_ratio(net.mr, std::abs(lambda_sig - lambda_res));
            ev.factor = 1.0 - ev.drop_ratio;
            events.push_back(ev);
            if (p == ch.dest && rc.id == ch.id) return events;  // terminate at own receiver
        }
        if (p == ch.dest)
            throw ValidationError(strfmt("channel %d reached ONI %d without finding its receiver",
                                         ch.id, p));
    }
    throw ValidationError(strfmt("channel %d never reached its destination %d", ch.id, ch.dest));
}

}  // namespace

double RingNetwork::ring_length_cm() const {
    double s = 0;
    for (double v : segment_cm) s += v;
    return s;
}

void RingNetwork::validate() const {
    if (n_onis < 2) throw ValidationError("a ring needs at least two ONIs");
    if (static_cast<int>(segment_cm.size()) != n_onis)
        throw ValidationError("segment count must equal the ONI count (closed ring)");
    if (static_cast<int>(oni_temperature_c.size()) != n_onis)
        throw ValidationError("per-ONI temperatures missing");
    for (double s : segment_cm)
        if (s < 0 || std::isnan(s)) throw ValidationError("segment lengths must be >= 0");
    if (!(ring_length_cm() > 0)) throw ValidationError("zero-length ring");
    if (!(propagation_loss_db_cm >= 0)) throw ValidationError("propagation loss must be >= 0");
    if (channels.empty()) throw ValidationError("ring has no channels");

    std::map<int, size_t> ids;
    for (size_t i = 0; i < channels.size(); i++) {
        const Channel& c = channels[i];
        if (c.source < 0 || c.source >= n_onis || c.dest < 0 || c.dest >= n_onis)
            throw ValidationError(strfmt("channel %d endpoints out of range", c.id));
        if (c.source == c.dest)
            throw ValidationError(strfmt("channel %d sends to its own ONI", c.id));
        if (c.injected_mw < 0)
            throw ValidationError(strfmt("channel %d has negative injected power", c.id));
        if (!ids.emplace(c.id, i).second)
            throw ValidationError(strfmt("duplicate channel id %d", c.id));
    }

    // Wavelength reuse: same nominal wavelength only on disjoint segment sets.
    auto segments_of = [&](const Channel& c) {
        std::vector<bool> used(n_onis, false);
        for (int p = c.source; p != c.dest; p = (p + 1) % n_onis) used[p] = true;
        return used;
    };
    for (size_t a = 0; a < channels.size(); a++)
        for (size_t b = a + 1; b < channels.size(); b++) {
            if (channels[a].nominal_wavelength_nm != channels[b].nominal_wavelength_nm) continue;
            auto ua = segments_of(channels[a]), ub = segments_of(channels[b]);
            for (int p = 0; p < n_onis; p++)
                if (ua[p] && ub[p])
                    throw ValidationError(strfmt(
                        "channels %d and %d share wavelength %.6g nm on overlapping segment %d",
                        channels[a].id, channels[b].id, channels[a].nominal_wavelength_nm, p));
        }
}

double PowerLedger::conservation_error() const {
    if (injected_mw <= 0) return 0.0;
    double sum = propagation_loss_mw + residual_mw;
    for (const auto& d : drops) sum += d.power_mw;
    return std::abs(injected_mw - sum) / injected_mw;
}

PowerLedger propagate_channel(const RingNetwork& net, const Channel& ch) {
    std::vector<Event> events = walk_events(net, ch);
    PowerLedger ledger;
    ledger.channel = ch.id;
    ledger.injected_mw = ch.injected_mw;

    // Closed form: the power incident on event e is the injected power times
    // the product of every upstream factor, each product taken afresh.
    auto incident = [&](size_t e) {
        double p = ch.injected_mw;
        for (size_t i = 0; i < e; i++) p *= events[i].factor;
        return p;
    };
    for (size_t e = 0; e < events.size(); e++) {
        const Event& ev = events[e];
        double p_in = incident(e);
        if (ev.kind == Event::Kind::Segment) {
            ledger.propagation_loss_mw += p_in * (1.0 - ev.factor);
        } else {
            DropEvent d;
            d.receiver_channel = net.channels[ev.receiver].id;
            d.at_position = ev.position;
            d.power_mw = p_in * ev.drop_ratio;
            ledger.drops.push_back(d);
            if (net.channels[ev.receiver].id == ch.id) ledger.signal_mw = d.power_mw;
        }
    }
    ledger.residual_mw = incident(events.size());
    return ledger;
}

PowerLedger oracle_propagate(const RingNetwork& net, const Channel& ch) {
    std::vector<Event> events = walk_events(net, ch);
    PowerLedger ledger;
    ledger.channel = ch.id;
    ledger.injected_mw = ch.injected_mw;

    // Sequential march. Every factor is a double, hence an exact rational;
    // all bookkeeping below is exact, so injected == drops + losses +
    // residual holds identically.
    Rational p(ch.injected_mw);
    Rational dissipated(0);
    for (const Event& ev : events) {
        if (ev.kind == Event::Kind::Segment) {
            Rational after = p * Rational(ev.factor);
            dissipated += p - after;
            p = after;
        } else {
            Rational drop = p * Rational(ev.drop_ratio);
            DropEvent d;
            d.receiver_channel = net.channels[ev.receiver].id;
            d.at_position = ev.position;
            d.power_mw = drop.convert_to<double>();
            ledger.drops.push_back(d);
            if (net.channels[ev.receiver].id == ch.id) ledger.signal_mw = d.power_mw;
            p -= drop;
        }
    }
    ledger.propagation_loss_mw = dissipated.convert_to<double>();
    ledger.residual_mw = p.convert_to<double>();
    return ledger;
}

std::vector<double> crosstalk_matrix(const RingNetwork& net, const std::vector<PowerLedger>& ledgers) {
    std::map<int, size_t> index;
    for (size_t i = 0; i < net.channels.size(); i++) index[net.channels[i].id] = i;
    std::vector<double> noise(net.channels.size(), 0.0);
    for (const PowerLedger& led : ledgers)
        for (const DropEvent& d : led.drops) {
            if (d.receiver_channel == led.channel) continue;  // own signal
            auto it = index.find(d.receiver_channel);
            if (it == index.end())
                throw ValidationError(strfmt("ledger drop references unknown channel %d",
                                             d.receiver_channel));
            noise[it->second] += d.power_mw;
        }
    return noise;
}

SnrReport evaluate(const RingNetwork& net) {
    net.validate();
    SnrReport report;
    report.ledgers.reserve(net.channels.size());
    for (const Channel& ch : net.channels) report.ledgers.push_back(propagate_channel(net, ch));
    std::vector<double> noise = crosstalk_matrix(net, report.ledgers);

    double sensitivity_mw = photonics::dbm_to_mw(net.sensitivity_dbm);
    double worst = 0.0;
    bool have_worst = false;
    for (size_t i = 0; i < net.channels.size(); i++) {
        const Channel& ch = net.channels[i];
        SnrRow row;
        row.channel = ch.id;
        row.source = ch.source;
        row.dest = ch.dest;
        row.wavelength_nm = resolved_wavelength(net, ch.nominal_wavelength_nm, ch.source);
        row.signal_mw = report.ledgers[i].signal_mw;
        row.noise_mw = noise[i];
        if (row.signal_mw <= 0) {
            row.no_signal = true;
            row.snr_db = 0.0;
            row.sensitivity_ok = false;
        } else {
            row.sensitivity_ok = row.signal_mw >= sensitivity_mw;
            if (row.noise_mw < net.noise_floor_mw) {
                row.noise_free = true;
                row.snr_db = net.snr_ceiling_db;
            } else {
                row.snr_db = std::min(10.0 * std::log10(row.signal_mw / row.noise_mw),
                                      net.snr_ceiling_db);
            }
            if (!have_worst || row.snr_db < worst) {
                worst = row.snr_db;
                have_worst = true;
            }
        }
        report.rows.push_back(row);
    }
    report.worst_snr_db = worst;
    return report;
}

void write_report_csv(const SnrReport& report, const std::string& path) {
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", path.c_str()));
    fprintf(f, "channel,source,dest,wavelength_nm,signal_mw,noise_mw,snr_db,sensitivity_ok\n");
    for (const SnrRow& r : report.rows)
        fprintf(f, "%d,%d,%d,%.10g,%.10g,%.10g,%.10g,%d\n", r.channel, r.source, r.dest,
                r.wavelength_nm, r.signal_mw, r.noise_mw, r.snr_db, r.sensitivity_ok ? 1 : 0);
    fclose(f);
}

void write_ledger_csv(const SnrReport& report, const std::string& path) {
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", path.c_str()));
    fprintf(f, "channel,event,kind,position,receiver_channel,power_mw\n");
    for (const PowerLedger& led : report.ledgers) {
        int e = 0;
        for (const DropEvent& d : led.drops)
            fprintf(f, "%d,%d,drop,%d,%d,%.10g\n", led.channel, e++, d.at_position,
                    d.receiver_channel, d.power_mw);
        fprintf(f, "%d,%d,propagation,-1,-1,%.10g\n", led.channel, e++, led.propagation_loss_mw);
        fprintf(f, "%d,%d,residual,-1,-1,%.10g\n", led.channel, e, led.residual_mw);
    }
    fclose(f);
}

}  // namespace photonoc::snr
