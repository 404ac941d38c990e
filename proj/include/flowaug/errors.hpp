#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowaug {

// Base for all toolkit errors. Callers that only need a message catch this.
class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

// A sample contains a non-finite value or otherwise cannot be encoded.
class MalformedSampleError : public Error {
public:
	using Error::Error;
};

// API misuse: wrong dimensions, missing CutMix partner, unknown names.
class UsageError : public Error {
public:
	using Error::Error;
};

// Invalid configuration record (augmentation params, sampler, plan, synth).
class ConfigError : public Error {
public:
	using Error::Error;
};

class IoError : public Error {
public:
	using Error::Error;
};

// Dataset / CSV / JSON parse failure. line is 1-based, 0 when not applicable.
class LoadError : public Error {
public:
	LoadError(std::size_t line, const std::string& what)
		: LoadError("", line, what)
	{
	}
	// Message reads "<source>: line N: what".
	LoadError(const std::string& source, std::size_t line, const std::string& what)
		: Error((source.empty() ? "" : source + ": ") + (line ? "line " + std::to_string(line) + ": " : "") + what)
		, line_(line)
		, detail_(what)
	{
	}
	std::size_t line() const noexcept { return line_; }
	const std::string& detail() const noexcept { return detail_; }

private:
	std::size_t line_;
	std::string detail_;
};

class SplitError : public Error {
public:
	using Error::Error;
};

// Training aborted (non-finite loss or exceeded time budget).
class TrainingError : public Error {
public:
	using Error::Error;
};

} // namespace flowaug
