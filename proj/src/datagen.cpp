#include "readmit/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "readmit/csv.hpp"
#include "readmit/error.hpp"
#include "readmit/rng.hpp"
#include "readmit/schema.hpp"

namespace readmit::datagen {

namespace {

constexpr int kMaxAdmissionsPerPatient = 40;
constexpr double kMeanNoteChars = 10550.0;
constexpr double kNullableFieldMissingRate = 0.02;
constexpr std::array<char, 3> kFactorNames{'a', 'b', 'c'};

int factor_bit(int cluster, int factor) { return (cluster >> factor) & 1; }

bool high_risk(int cluster) {
  return (factor_bit(cluster, 0) ^ factor_bit(cluster, 1)) && factor_bit(cluster, 2);
}

std::string group_tag(int factor, int bit) {
  return std::string(1, kFactorNames[factor]) + static_cast<char>('0' + bit);
}

// Vocabulary of `n` codes. The first 60% are split into six factor groups
// (a0,a1,b0,b1,c0,c1); the remainder is cluster-neutral.
struct CodeVocab {
  int n = 0;
  int group_size = 0;

  explicit CodeVocab(int size) : n(size), group_size(std::max(1, size * 6 / 10 / 6)) {}

  // Group 0..5, or -1 for neutral codes.
  int group_of(int idx) const {
    int g = idx / group_size;
    return g < 6 ? g : -1;
  }

  int draw(Rng& rng, int cluster, double factor_share) const {
    if (rng.bernoulli(factor_share)) {
      int f = static_cast<int>(rng.below(3));
      int g = 2 * f + factor_bit(cluster, f);
      return g * group_size + static_cast<int>(rng.below(static_cast<std::uint64_t>(group_size)));
    }
    int neutral_start = 6 * group_size;
    if (neutral_start >= n) return static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    return neutral_start + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - neutral_start)));
  }
};

std::string code_name(char prefix, int idx) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%05d", prefix, idx);
  return buf;
}

int code_version(int idx) { return idx % 3 == 0 ? 9 : 10; }

std::string code_title(Rng& rng, const std::string& word_prefix, int group) {
  std::string title;
  auto append = [&](const std::string& w) {
    if (!title.empty()) title.push_back(' ');
    title += w;
  };
  const int group_words = group >= 0 ? 4 : 0;
  for (int i = 0; i < group_words; ++i) {
    append(word_prefix + group_tag(group / 2, group % 2) + "_" + std::to_string(rng.below(6)));
  }
  for (int i = group_words; i < 6; ++i) {
    append(word_prefix + "x_" + std::to_string(rng.below(12)));
  }
  return title;
}

std::string pick_demographic(Rng& rng, const std::span<const std::string_view> values,
                             std::array<int, 2> preferred, int bit, double concentration,
                             bool nullable) {
  if (nullable && rng.bernoulli(kNullableFieldMissingRate)) return std::string(schema::kMissing);
  if (rng.bernoulli(concentration)) return std::string(values[preferred[bit]]);
  return std::string(values[rng.below(values.size())]);
}

}  // namespace

void GenConfig::validate() const {
  auto bad = [](const char* field, const std::string& why) {
    fail(ErrorKind::Config, std::string("GenConfig.") + field + " " + why);
  };
  if (n_patients <= 0) bad("n_patients", "must be positive");
  if (!(mean_admissions_per_patient >= 1.0)) bad("mean_admissions_per_patient", "must be >= 1");
  if (!(readmission_base_rate > 0.0 && readmission_base_rate < 1.0)) {
    bad("readmission_base_rate", "must be in (0,1)");
  }
  if (!(homophily_strength >= 0.0 && homophily_strength <= 1.0)) {
    bad("homophily_strength", "must be in [0,1]");
  }
  if (n_lab_items <= 0) bad("n_lab_items", "must be positive");
  if (n_icd_diag < 12) bad("n_icd_diag", "must be at least 12");
  if (n_icd_proc < 12) bad("n_icd_proc", "must be at least 12");
  if (!(note_length_scale > 0.0)) bad("note_length_scale", "must be positive");
  if (!(missing_modality_fraction >= 0.0 && missing_modality_fraction < 1.0)) {
    bad("missing_modality_fraction", "must be in [0,1)");
  }
  if (!(death_fraction >= 0.0 && death_fraction < 1.0)) bad("death_fraction", "must be in [0,1)");
  if (!(demographic_concentration >= 0.0 && demographic_concentration <= 1.0)) {
    bad("demographic_concentration", "must be in [0,1]");
  }
}

double cluster_readmission_probability(const GenConfig& config, int cluster) {
  // Two of eight clusters are high risk; the low-risk level keeps the
  // cluster-average probability equal to the base rate.
  const double base = config.readmission_base_rate;
  const double high = std::min(3.8 * base, 0.95);
  const double low = (base - 0.25 * high) / 0.75;
  const double risk = high_risk(cluster) ? high : low;
  return (1.0 - config.homophily_strength) * base + config.homophily_strength * risk;
}

RawTables generate(const GenConfig& cfg, std::vector<int>* latent_cluster) {
  cfg.validate();
  Rng rng(splitmix64(cfg.seed));
  RawTables t;

  const CodeVocab diag_vocab(cfg.n_icd_diag);
  const CodeVocab proc_vocab(cfg.n_icd_proc);
  const int lab_slice = std::clamp(cfg.n_lab_items / 20, 1, 8);

  {
    Rng title_rng(splitmix64(cfg.seed ^ 0x7469746c65ULL));
    for (int i = 0; i < cfg.n_icd_diag; ++i) {
      t.code_text_map.push_back(
          {code_name('D', i), code_version(i), code_title(title_rng, "dxw_", diag_vocab.group_of(i))});
    }
    for (int i = 0; i < cfg.n_icd_proc; ++i) {
      t.code_text_map.push_back(
          {code_name('P', i), code_version(i), code_title(title_rng, "pxw_", proc_vocab.group_of(i))});
    }
  }

  const double continue_total = 1.0 - 1.0 / cfg.mean_admissions_per_patient;
  std::int64_t next_hadm = kFirstAdmissionId;
  if (latent_cluster) latent_cluster->clear();

  for (int p = 0; p < cfg.n_patients; ++p) {
    const std::int64_t subject = kFirstSubjectId + p;
    const int cluster = static_cast<int>(rng.below(kClusters));
    if (latent_cluster) latent_cluster->push_back(cluster);
    const int bit_a = factor_bit(cluster, 0);
    const int bit_b = factor_bit(cluster, 1);
    const int bit_c = factor_bit(cluster, 2);

    PatientRow patient;
    patient.subject_id = subject;
    patient.gender = rng.bernoulli(0.52) ? "F" : "M";
    const double age_mean = 48.0 + 18.0 * bit_c;
    patient.anchor_age = std::clamp(static_cast<int>(std::lround(age_mean + 14.0 * rng.normal())), 18, 90);
    t.patients.push_back(patient);

    const double p_readmit = cluster_readmission_probability(cfg, cluster);
    const double p_later = std::max(0.0, continue_total - p_readmit);

    Minutes clock = static_cast<Minutes>(rng.below(4 * 365 * kMinutesPerDay));
    for (int k = 0; k < kMaxAdmissionsPerPatient; ++k) {
      AdmissionRow adm;
      adm.subject_id = subject;
      adm.hadm_id = next_hadm++;
      adm.admittime = clock;
      const double los_hours = std::max(1.0, std::exp(4.4 + 0.8 * rng.normal()));
      adm.dischtime = adm.admittime + std::max<Minutes>(60, std::llround(los_hours * 60.0));
      const double conc = cfg.demographic_concentration;
      adm.admission_type = pick_demographic(rng, schema::admission_types(), {3, 5}, bit_a, conc, true);
      adm.admission_location =
          pick_demographic(rng, schema::admission_locations(), {2, 6}, bit_b, conc, true);
      adm.discharge_location =
          pick_demographic(rng, schema::discharge_locations(), {5, 11}, bit_c, conc, true);
      adm.insurance = pick_demographic(rng, schema::insurances(), {2, 1}, bit_a, conc, true);
      adm.ethnicity = pick_demographic(rng, schema::ethnicities(), {0, 1}, bit_b, conc, true);
      adm.marital_status = pick_demographic(rng, schema::marital_statuses(), {0, 2}, bit_c, conc, true);
      if (rng.bernoulli(kNullableFieldMissingRate)) {
        adm.language = "";
      } else {
        adm.language = rng.bernoulli(0.88) ? "ENGLISH" : "?";
      }

      const double miss = cfg.missing_modality_fraction;
      if (!rng.bernoulli(miss)) {
        const int n = 1 + rng.poisson(11.5);
        for (int s = 1; s <= n; ++s) {
          int idx = diag_vocab.draw(rng, cluster, 0.7);
          t.diagnoses_icd.push_back({subject, adm.hadm_id, s, code_name('D', idx), code_version(idx)});
        }
      }
      if (!rng.bernoulli(miss)) {
        const int n = 1 + rng.poisson(1.9);
        for (int s = 1; s <= n; ++s) {
          int idx = proc_vocab.draw(rng, cluster, 0.7);
          t.procedures_icd.push_back({subject, adm.hadm_id, s, code_name('P', idx), code_version(idx)});
        }
      }
      if (!rng.bernoulli(miss)) {
        const Minutes span = adm.dischtime - adm.admittime;
        auto add_events = [&](int item, bool profiled) {
          const int n_events = 2 + rng.poisson(1.5);
          for (int e = 0; e < n_events; ++e) {
            LabRow lab;
            lab.subject_id = subject;
            lab.hadm_id = adm.hadm_id;
            lab.itemid = kFirstLabItem + item;
            lab.charttime = adm.admittime + static_cast<Minutes>(rng.below(static_cast<std::uint64_t>(span) + 1));
            lab.abnormal = rng.bernoulli(profiled ? 0.7 : 0.12);
            t.labevents.push_back(lab);
          }
        };
        // Panel items (the six factor slices) are ordered routinely; their
        // abnormality follows the cluster profile.
        const int panel = std::min(cfg.n_lab_items, 6 * lab_slice);
        for (int item = 0; item < panel; ++item) {
          if (!rng.bernoulli(0.85)) continue;
          const int g = std::min(5, item / lab_slice);
          add_events(item, factor_bit(cluster, g / 2) == g % 2);
        }
        if (panel < cfg.n_lab_items) {
          const int extra = rng.poisson(6.0);
          for (int i = 0; i < extra; ++i) {
            add_events(panel + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_lab_items - panel))), false);
          }
        }
        if (rng.bernoulli(0.002)) {
          t.labevents.push_back({subject, adm.hadm_id, kFirstLabItem + cfg.n_lab_items + 1 +
                                                           static_cast<std::int64_t>(rng.below(10)),
                                 adm.admittime, rng.bernoulli(0.5)});
        }
      }
      if (!rng.bernoulli(miss)) {
        const double chars = std::max(
            20.0, kMeanNoteChars * cfg.note_length_scale * (1.0 + 0.3 * rng.normal()));
        std::string text;
        while (text.size() < chars) {
          if (!text.empty()) text.push_back(' ');
          const double u = rng.uniform();
          if (u < 0.45) {
            int f = static_cast<int>(rng.below(3));
            text += "nt_" + group_tag(f, factor_bit(cluster, f)) + "_" + std::to_string(rng.below(8));
          } else if (u < 0.85) {
            text += "nt_c_" + std::to_string(rng.below(12));
          } else {
            text += "nt_x_" + std::to_string(rng.below(2000));
          }
        }
        t.discharge_notes.push_back({subject, adm.hadm_id, std::move(text)});
      }

      const double u = rng.uniform();
      const bool last = k + 1 == kMaxAdmissionsPerPatient || u >= p_readmit + p_later;
      if (last && rng.bernoulli(cfg.death_fraction)) adm.deathtime = adm.dischtime;
      const Minutes discharge = adm.dischtime;
      t.admissions.push_back(std::move(adm));
      if (last) break;
      Minutes gap;
      if (u < p_readmit) {
        gap = 1 + static_cast<Minutes>(rng.below(30 * kMinutesPerDay));
      } else {
        gap = 30 * kMinutesPerDay + 1 + std::llround(rng.exponential(200.0 * kMinutesPerDay));
      }
      clock = discharge + gap;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// CSV persistence

namespace {

std::string opt_time(const std::optional<Minutes>& t) { return t ? format_timestamp(*t) : std::string(); }

Minutes time_field(const csv::Reader& r, std::size_t column, const std::string& s) {
  Minutes t = 0;
  if (!parse_timestamp(s, t)) r.error(column, "malformed timestamp '" + s + "'");
  return t;
}

void write_codes(const std::vector<CodeRow>& rows, const std::filesystem::path& path, const std::string& comment) {
  csv::Writer w(path);
  if (!comment.empty()) w.comment(comment);
  w.row({"subject_id", "hadm_id", "seq_num", "icd_code", "icd_version"});
  for (const auto& c : rows) {
    w.row({std::to_string(c.subject_id), std::to_string(c.hadm_id), std::to_string(c.seq_num), c.icd_code,
           std::to_string(c.icd_version)});
  }
}

std::vector<CodeRow> read_codes(const std::filesystem::path& path) {
  csv::Reader r(path);
  csv::HeaderMap h(r, {"subject_id", "hadm_id", "seq_num", "icd_code", "icd_version"});
  std::vector<CodeRow> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != h.width()) r.error(f.size(), "expected " + std::to_string(h.width()) + " fields");
    CodeRow c;
    c.subject_id = csv::to_int(r, h[0] + 1, f[h[0]]);
    c.hadm_id = csv::to_int(r, h[1] + 1, f[h[1]]);
    c.seq_num = static_cast<int>(csv::to_int(r, h[2] + 1, f[h[2]]));
    c.icd_code = f[h[3]];
    c.icd_version = static_cast<int>(csv::to_int(r, h[4] + 1, f[h[4]]));
    out.push_back(std::move(c));
  }
  return out;
}

void check_width(const csv::Reader& r, const std::vector<std::string>& f, const csv::HeaderMap& h) {
  if (f.size() != h.width()) {
    r.error(std::min(f.size(), h.width()) + 1,
            "expected " + std::to_string(h.width()) + " fields, got " + std::to_string(f.size()));
  }
}

}  // namespace

void write_tables(const RawTables& t, const std::filesystem::path& dir, const std::string& comment) {
  std::filesystem::create_directories(dir);
  {
    csv::Writer w(dir / "admissions.csv");
    if (!comment.empty()) w.comment(comment);
    w.row({"subject_id", "hadm_id", "admittime", "dischtime", "deathtime", "admission_type",
           "admission_location", "discharge_location", "insurance", "language", "marital_status",
           "ethnicity"});
    for (const auto& a : t.admissions) {
      w.row({std::to_string(a.subject_id), std::to_string(a.hadm_id), format_timestamp(a.admittime),
             format_timestamp(a.dischtime), opt_time(a.deathtime), a.admission_type, a.admission_location,
             a.discharge_location, a.insurance, a.language, a.marital_status, a.ethnicity});
    }
  }
  {
    csv::Writer w(dir / "patients.csv");
    if (!comment.empty()) w.comment(comment);
    w.row({"subject_id", "gender", "anchor_age"});
    for (const auto& p : t.patients) {
      w.row({std::to_string(p.subject_id), p.gender, std::to_string(p.anchor_age)});
    }
  }
  write_codes(t.diagnoses_icd, dir / "diagnoses_icd.csv", comment);
  write_codes(t.procedures_icd, dir / "procedures_icd.csv", comment);
  {
    csv::Writer w(dir / "labevents.csv");
    if (!comment.empty()) w.comment(comment);
    w.row({"subject_id", "hadm_id", "itemid", "charttime", "flag"});
    for (const auto& l : t.labevents) {
      w.row({std::to_string(l.subject_id), std::to_string(l.hadm_id), std::to_string(l.itemid),
             format_timestamp(l.charttime), l.abnormal ? "abnormal" : "normal"});
    }
  }
  {
    csv::Writer w(dir / "discharge_notes.csv");
    if (!comment.empty()) w.comment(comment);
    w.row({"subject_id", "hadm_id", "note_text"});
    for (const auto& n : t.discharge_notes) {
      w.row({std::to_string(n.subject_id), std::to_string(n.hadm_id), n.note_text});
    }
  }
  {
    csv::Writer w(dir / "code_text_map.csv");
    if (!comment.empty()) w.comment(comment);
    w.row({"icd_code", "icd_version", "long_title"});
    for (const auto& c : t.code_text_map) {
      w.row({c.icd_code, std::to_string(c.icd_version), c.long_title});
    }
  }
}

RawTables read_tables(const std::filesystem::path& dir) {
  RawTables t;
  std::vector<std::string> f;
  {
    csv::Reader r(dir / "admissions.csv");
    csv::HeaderMap h(r, {"subject_id", "hadm_id", "admittime", "dischtime", "deathtime", "admission_type",
                         "admission_location", "discharge_location", "insurance", "language",
                         "marital_status", "ethnicity"});
    while (r.next(f)) {
      check_width(r, f, h);
      AdmissionRow a;
      a.subject_id = csv::to_int(r, h[0] + 1, f[h[0]]);
      a.hadm_id = csv::to_int(r, h[1] + 1, f[h[1]]);
      a.admittime = time_field(r, h[2] + 1, f[h[2]]);
      a.dischtime = time_field(r, h[3] + 1, f[h[3]]);
      if (!f[h[4]].empty()) a.deathtime = time_field(r, h[4] + 1, f[h[4]]);
      a.admission_type = f[h[5]];
      a.admission_location = f[h[6]];
      a.discharge_location = f[h[7]];
      a.insurance = f[h[8]];
      a.language = f[h[9]];
      a.marital_status = f[h[10]];
      a.ethnicity = f[h[11]];
      t.admissions.push_back(std::move(a));
    }
  }
  {
    csv::Reader r(dir / "patients.csv");
    csv::HeaderMap h(r, {"subject_id", "gender", "anchor_age"});
    while (r.next(f)) {
      check_width(r, f, h);
      PatientRow p;
      p.subject_id = csv::to_int(r, h[0] + 1, f[h[0]]);
      p.gender = f[h[1]];
      p.anchor_age = static_cast<int>(csv::to_int(r, h[2] + 1, f[h[2]]));
      t.patients.push_back(std::move(p));
    }
  }
  t.diagnoses_icd = read_codes(dir / "diagnoses_icd.csv");
  t.procedures_icd = read_codes(dir / "procedures_icd.csv");
  {
    csv::Reader r(dir / "labevents.csv");
    csv::HeaderMap h(r, {"subject_id", "hadm_id", "itemid", "charttime", "flag"});
    while (r.next(f)) {
      check_width(r, f, h);
      LabRow l;
      l.subject_id = csv::to_int(r, h[0] + 1, f[h[0]]);
      l.hadm_id = csv::to_int(r, h[1] + 1, f[h[1]]);
      l.itemid = csv::to_int(r, h[2] + 1, f[h[2]]);
      l.charttime = time_field(r, h[3] + 1, f[h[3]]);
      const std::string& flag = f[h[4]];
      if (flag == "abnormal") {
        l.abnormal = true;
      } else if (flag != "normal") {
        r.error(h[4] + 1, "flag must be 'normal' or 'abnormal', got '" + flag + "'");
      }
      t.labevents.push_back(l);
    }
  }
  {
    csv::Reader r(dir / "discharge_notes.csv");
    csv::HeaderMap h(r, {"subject_id", "hadm_id", "note_text"});
    while (r.next(f)) {
      check_width(r, f, h);
      t.discharge_notes.push_back(
          {csv::to_int(r, h[0] + 1, f[h[0]]), csv::to_int(r, h[1] + 1, f[h[1]]), std::move(f[h[2]])});
    }
  }
  {
    csv::Reader r(dir / "code_text_map.csv");
    csv::HeaderMap h(r, {"icd_code", "icd_version", "long_title"});
    while (r.next(f)) {
      check_width(r, f, h);
      t.code_text_map.push_back(
          {f[h[0]], static_cast<int>(csv::to_int(r, h[1] + 1, f[h[1]])), std::move(f[h[2]])});
    }
  }
  return t;
}

}  // namespace readmit::datagen
