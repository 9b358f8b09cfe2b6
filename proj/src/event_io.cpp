#include "skyshield/event_io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <string>

namespace skyshield {

namespace {

template <typename T>
void put_le(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(char((v >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= T(p[i]) << (8 * i);
  }
  return v;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::IoFailure, "read failed for " + path.string());
  return data;
}

void write_all(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot open " + path.string());
  out.write(data.data(), std::streamsize(data.size()));
  if (!out) raise(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace

EventRecording read_recording(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());

  if (data.size() < kEventHeaderBytes) {
    raise(ErrorCode::MalformedHeader, "file shorter than header");
  }
  if (std::memcmp(p, kEventMagic, 4) != 0) {
    raise(ErrorCode::MalformedHeader, "bad magic");
  }
  const auto version = get_le<std::uint16_t>(p + 4);
  if (version != kEventFormatVersion) {
    raise(ErrorCode::MalformedHeader, "unsupported version " + std::to_string(version));
  }

  EventRecording rec;
  rec.width = get_le<std::uint16_t>(p + 6);
  rec.height = get_le<std::uint16_t>(p + 8);
  const auto count = get_le<std::uint64_t>(p + 10);

  const std::size_t payload = data.size() - kEventHeaderBytes;
  if (payload / kEventRecordBytes < count || payload % kEventRecordBytes != 0) {
    raise(ErrorCode::TruncatedRecord, "expected " + std::to_string(count) +
                                          " records, payload is " +
                                          std::to_string(payload) + " bytes");
  }

  rec.events.reserve(count);
  const unsigned char* q = p + kEventHeaderBytes;
  std::uint64_t prev_t = 0;
  for (std::uint64_t i = 0; i < count; ++i, q += kEventRecordBytes) {
    Event e;
    e.t = get_le<std::uint64_t>(q);
    e.x = get_le<std::uint16_t>(q + 8);
    e.y = get_le<std::uint16_t>(q + 10);
    const unsigned char pol = q[12];
    if (pol > 1) {
      raise(ErrorCode::MalformedRecord,
            "record " + std::to_string(i) + " has polarity byte " + std::to_string(pol));
    }
    e.polarity = pol ? std::int8_t(1) : std::int8_t(-1);
    if (e.x >= rec.width || e.y >= rec.height) {
      raise(ErrorCode::OutOfBounds,
            "record " + std::to_string(i) + " outside sensor geometry");
    }
    if (i > 0 && e.t < prev_t) {
      raise(ErrorCode::NonMonotonicTime, "timestamp decreases at record " + std::to_string(i));
    }
    prev_t = e.t;
    rec.events.push_back(e);
  }
  return rec;
}

EventRecording read_recording_csv(const std::filesystem::path& path,
                                  std::uint16_t width, std::uint16_t height) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    raise(ErrorCode::MalformedHeader, "empty CSV file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_us,x,y,polarity") {
    raise(ErrorCode::MalformedHeader, "bad CSV header: " + line);
  }

  EventRecording rec;
  rec.width = width;
  rec.height = height;

  std::size_t line_no = 1;
  std::uint64_t prev_t = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const char* s = line.data();
    const char* end = s + line.size();
    auto field = [&](auto& out) {
      auto [next, ec] = std::from_chars(s, end, out);
      if (ec != std::errc()) {
        raise(ErrorCode::MalformedRecord, "bad field at line " + std::to_string(line_no));
      }
      s = next;
    };
    auto comma = [&] {
      if (s == end || *s != ',') {
        raise(ErrorCode::MalformedRecord, "missing comma at line " + std::to_string(line_no));
      }
      ++s;
    };

    std::uint64_t t = 0;
    unsigned x = 0, y = 0, pol = 0;
    field(t); comma(); field(x); comma(); field(y); comma(); field(pol);
    if (s != end || pol > 1 || x > 0xffff || y > 0xffff) {
      raise(ErrorCode::MalformedRecord, "bad record at line " + std::to_string(line_no));
    }
    if (x >= width || y >= height) {
      raise(ErrorCode::OutOfBounds, "record outside geometry at line " + std::to_string(line_no));
    }
    if (!rec.events.empty() && t < prev_t) {
      raise(ErrorCode::NonMonotonicTime, "timestamp decreases at line " + std::to_string(line_no));
    }
    prev_t = t;
    rec.events.push_back(Event{t, std::uint16_t(x), std::uint16_t(y),
                               pol ? std::int8_t(1) : std::int8_t(-1)});
  }
  return rec;
}

void write_recording(const EventRecording& rec, const std::filesystem::path& path,
                     EventFormat format) {
  try {
    rec.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OutOfBounds || e.code() == ErrorCode::NonMonotonicTime ||
        e.code() == ErrorCode::RejectedInvariant) {
      raise(ErrorCode::RejectedInvariant, std::string("refusing to write: ") + e.what());
    }
    throw;
  }

  std::string buf;
  if (format == EventFormat::binary) {
    buf.reserve(kEventHeaderBytes + rec.events.size() * kEventRecordBytes);
    buf.append(kEventMagic, 4);
    put_le(buf, kEventFormatVersion);
    put_le(buf, rec.width);
    put_le(buf, rec.height);
    put_le(buf, std::uint64_t(rec.events.size()));
    for (const Event& e : rec.events) {
      put_le(buf, e.t);
      put_le(buf, e.x);
      put_le(buf, e.y);
      buf.push_back(e.polarity > 0 ? char(1) : char(0));
      buf.push_back(char(0));
    }
  } else {
    buf = "t_us,x,y,polarity\n";
    for (const Event& e : rec.events) {
      buf += std::to_string(e.t);
      buf += ',';
      buf += std::to_string(e.x);
      buf += ',';
      buf += std::to_string(e.y);
      buf += ',';
      buf += (e.polarity > 0 ? '1' : '0');
      buf += '\n';
    }
  }
  write_all(path, buf);
}

}  // namespace skyshield
